"""End-to-end answering: augment query -> retrieve -> deduplicate ->
assemble prompt -> complete.

Retrieved QA pairs are deduplicated before prompting: when two questions
are near-identical (normalized edit distance below a threshold, or
question-embedding cosine above one) and their answers are also
semantically close, the less credible item is dropped.  Source credibility
is a strict order: helpx docs beat community questions beat video-derived
QA beats LLM-generated QA; ties fall back to answer length, then rank.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import embedder, vector_index
from .embedder import FeatureConfig, Projection
from .errors import VersionMismatchError
from .llm_client import CompletionRequest, LlmProvider
from .product_intent import (
    IntentResult,
    ProductCatalog,
    augment_query,
    detect_products,
)
from .vector_index import Index, RetrievedItem

UNANSWERABLE = "This question cannot be answered at the moment."

# Higher wins a duplicate contest.
CREDIBILITY = {
    "helpx_doc": 3,
    "community_question": 2,
    "generated_video_qa": 1,
    "generated_helpx_qa": 0,
}

DEFAULT_ANSWER_TEMPLATE = (
    "You are an assistant that helps humans use {product}. "
    "You will be given a list of question-answer pairs (some pairs might be "
    "irrelevant) and a user query. Your goal is to answer the user query using "
    "only information from the given question-answer pairs.\n"
    "\n"
    "List of question-answer pairs:\n"
    "{qa_pairs}\n"
    "\n"
    "User query: {query}\n"
    "Answer: "
)

GENERIC_PRODUCT = "this product"


@dataclass(frozen=True)
class DedupConfig:
    levenshtein_norm_threshold: float = 0.2
    question_sim_threshold: float = 0.92
    answer_sim_threshold: float = 0.85

    def __post_init__(self):
        for name in (
            "levenshtein_norm_threshold",
            "question_sim_threshold",
            "answer_sim_threshold",
        ):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = 8
    context_budget: int = 5
    min_score: float = 0.15


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insert, delete, substitute)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            )
        prev = cur
    return prev[len(b)]


def normalized_levenshtein(a: str, b: str) -> float:
    """Edit distance over max length; 0 when both strings are empty."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def item_question(item: vector_index.IndexItem) -> str:
    return item.question if item.question else item.match_text


def item_answer(item: vector_index.IndexItem) -> str:
    return item.answer or ""


@dataclass(frozen=True)
class DropEntry:
    kept_id: str
    dropped_id: str
    reason: str

    def to_list(self) -> list[str]:
        return [self.kept_id, self.dropped_id, self.reason]


def _pick_loser(a: RetrievedItem, b: RetrievedItem) -> tuple[RetrievedItem, RetrievedItem, str]:
    """Return (kept, dropped, reason) for a confirmed duplicate pair."""
    cred_a = CREDIBILITY[a.item.kind]
    cred_b = CREDIBILITY[b.item.kind]
    if cred_a != cred_b:
        kept, dropped = (a, b) if cred_a > cred_b else (b, a)
        return kept, dropped, "credibility"
    len_a = len(item_answer(a.item))
    len_b = len(item_answer(b.item))
    if len_a != len_b:
        kept, dropped = (a, b) if len_a > len_b else (b, a)
        return kept, dropped, "answer_length"
    kept, dropped = (a, b) if a.rank < b.rank else (b, a)
    return kept, dropped, "rank"


def dedup(
    items: Sequence[RetrievedItem],
    cfg: DedupConfig,
    embed: Callable[[str], np.ndarray],
) -> tuple[list[RetrievedItem], list[DropEntry]]:
    """Drop near-duplicate QA pairs, keeping the more credible source.

    Questions gate the comparison (edit distance or embedding cosine);
    answers confirm it (embedding cosine).  Survivors keep their original
    rank order.
    """
    n = len(items)
    if n <= 1:
        return list(items), []
    q_emb = [embed(item_question(it.item)) for it in items]
    a_emb = [embed(item_answer(it.item)) for it in items]
    questions = [item_question(it.item) for it in items]
    alive = [True] * n
    drops: list[DropEntry] = []
    for i in range(n):
        if not alive[i]:
            continue
        for j in range(i + 1, n):
            if not alive[i]:
                break
            if not alive[j]:
                continue
            questions_close = (
                normalized_levenshtein(questions[i], questions[j])
                < cfg.levenshtein_norm_threshold
                or embedder.cosine(q_emb[i], q_emb[j]) > cfg.question_sim_threshold
            )
            if not questions_close:
                continue
            if embedder.cosine(a_emb[i], a_emb[j]) <= cfg.answer_sim_threshold:
                continue
            kept, dropped, reason = _pick_loser(items[i], items[j])
            alive[j if dropped is items[j] else i] = False
            drops.append(
                DropEntry(kept_id=kept.item.item_id, dropped_id=dropped.item.item_id, reason=reason)
            )
    return [it for idx, it in enumerate(items) if alive[idx]], drops


def assemble_prompt(
    query: str,
    items: Sequence[RetrievedItem],
    product: Optional[str] = None,
    template: str = DEFAULT_ANSWER_TEMPLATE,
) -> str:
    """Fill the answering template: product slot, numbered QA-pair list,
    user query, trailing answer cue.  Byte-deterministic."""
    if not items:
        raise ValueError("assemble_prompt needs at least one retrieved item")
    lines = []
    for idx, ri in enumerate(items, start=1):
        q = item_question(ri.item)
        a = item_answer(ri.item)
        lines.append(f"{idx}. QUESTION: {q}\n   ANSWER: {a}")
    return template.format(
        product=product if product else GENERIC_PRODUCT,
        qa_pairs="\n".join(lines),
        query=query,
    )


@dataclass
class AnswerBundle:
    answer: str
    used_items: list[RetrievedItem]
    dropped_duplicates: list[DropEntry]
    products: IntentResult
    prompt: str
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        out = {
            "answer": self.answer,
            "used_items": [
                {
                    "item_id": ri.item.item_id,
                    "kind": ri.item.kind,
                    "question": ri.item.question,
                    "answer": ri.item.answer,
                    "url": ri.item.url,
                    "product_tags": list(ri.item.product_tags),
                    "score": round(ri.score, 6),
                    "rank": ri.rank,
                }
                for ri in self.used_items
            ],
            "dropped_duplicates": [d.to_list() for d in self.dropped_duplicates],
            "products": self.products.to_dict(),
            "prompt": self.prompt,
        }
        if include_timings:
            out["timings"] = self.timings
        return out


@dataclass
class RagEngine:
    """Shared immutable state for answering: index, projection, catalog,
    client, and the knobs around them."""

    index: Index
    projection: Projection
    fcfg: FeatureConfig
    catalog: Optional[ProductCatalog]
    client: LlmProvider
    dedup_cfg: DedupConfig = field(default_factory=DedupConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    template: str = DEFAULT_ANSWER_TEMPLATE

    def __post_init__(self):
        if self.index.projection_version != self.projection.version:
            raise VersionMismatchError(
                f"index was built with projection version {self.index.projection_version}, "
                f"loaded projection is version {self.projection.version}"
            )

    def embed(self, text: str) -> np.ndarray:
        return embedder.embed(text, self.projection, self.fcfg)

    def detect(self, query: str) -> IntentResult:
        if self.catalog is None:
            return IntentResult(products=(), method="none")
        return detect_products(query, self.catalog)

    def retrieve(
        self,
        query: str,
        k: Optional[int] = None,
        product_filter: Optional[set[str]] = None,
    ) -> list[RetrievedItem]:
        emb = self.embed(query)
        return vector_index.search(
            self.index, emb, k or self.retrieval.k, product_filter
        )

    def answer(
        self,
        query: str,
        product_override: Optional[set[str]] = None,
    ) -> AnswerBundle:
        timings: dict[str, float] = {}
        t0 = time.monotonic()

        t = time.monotonic()
        intent = self.detect(query)
        timings["intent_ms"] = (time.monotonic() - t) * 1000

        if product_override is not None:
            product_filter: set[str] = set(product_override)
            top_product = sorted(product_filter)[0] if product_filter else None
        else:
            augmented = augment_query(query, intent)
            product_filter = set(augmented.product_filter)
            top_product = intent.products[0][0] if intent.products else None

        t = time.monotonic()
        hits = self.retrieve(query, self.retrieval.k, product_filter or None)
        hits = [h for h in hits if h.score > self.retrieval.min_score]
        timings["retrieve_ms"] = (time.monotonic() - t) * 1000

        if not hits:
            timings["total_ms"] = (time.monotonic() - t0) * 1000
            return AnswerBundle(
                answer=UNANSWERABLE,
                used_items=[],
                dropped_duplicates=[],
                products=intent,
                prompt="",
                timings=timings,
            )

        t = time.monotonic()
        kept, drops = dedup(hits, self.dedup_cfg, self.embed)
        kept = kept[: self.retrieval.context_budget]
        timings["dedup_ms"] = (time.monotonic() - t) * 1000

        prompt = assemble_prompt(query, kept, top_product, self.template)

        t = time.monotonic()
        result = self.client.complete(CompletionRequest(prompt=prompt))
        timings["llm_ms"] = (time.monotonic() - t) * 1000
        timings["total_ms"] = (time.monotonic() - t0) * 1000

        return AnswerBundle(
            answer=result.samples[0],
            used_items=kept,
            dropped_duplicates=drops,
            products=intent,
            prompt=prompt,
            timings=timings,
        )
