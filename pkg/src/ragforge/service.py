"""HTTP surface for the answering engine.

POST /ask      {"query": ..., "products": [...]?} -> AnswerBundle JSON
POST /retrieve {"query": ..., "k": ...?}          -> ranked items, no LLM call
GET  /health                                      -> status, index size, projection version
GET  /config                                      -> product catalog names and retrieval knobs

Requests are independent; all shared state (index, projection, catalog) is
immutable after startup.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import RagforgeError
from .rag_pipeline import RagEngine


class AskRequest(BaseModel):
    query: str
    products: Optional[list[str]] = None


class RetrieveRequest(BaseModel):
    query: str
    k: Optional[int] = None


def create_app(engine: RagEngine, ui_origin: str = "*") -> FastAPI:
    app = FastAPI(title="ragforge")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[ui_origin] if ui_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "index_size": len(engine.index),
            "projection_version": engine.projection.version,
        }

    @app.get("/config")
    def config():
        return {
            "products": list(engine.catalog.products) if engine.catalog else [],
            "retrieval": {
                "k": engine.retrieval.k,
                "context_budget": engine.retrieval.context_budget,
                "min_score": engine.retrieval.min_score,
            },
        }

    @app.post("/ask")
    def ask(req: AskRequest):
        if not req.query.strip():
            raise HTTPException(status_code=422, detail="query must be non-empty")
        override = set(req.products) if req.products is not None else None
        try:
            bundle = engine.answer(req.query, product_override=override)
        except RagforgeError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return bundle.to_dict()

    @app.post("/retrieve")
    def retrieve(req: RetrieveRequest):
        if not req.query.strip():
            raise HTTPException(status_code=422, detail="query must be non-empty")
        try:
            hits = engine.retrieve(req.query, req.k)
        except RagforgeError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return {
            "items": [
                {
                    "item_id": h.item.item_id,
                    "kind": h.item.kind,
                    "question": h.item.question,
                    "answer": h.item.answer,
                    "url": h.item.url,
                    "product_tags": list(h.item.product_tags),
                    "score": round(h.score, 6),
                    "rank": h.rank,
                }
                for h in hits
            ]
        }

    return app
