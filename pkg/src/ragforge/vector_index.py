"""Exact cosine top-k index over all retrieval sources.

The corpus stays desk-scale, so search is a full scan: every query is
scored against every item and the ranking is exact.  A product filter is a
soft preference, not an exclusion: items whose tags intersect the filter
are ranked strictly before all others, and both blocks are ordered by
score descending with item_id as the tie-break.

An Index is immutable once built; concurrent searches are safe, and a
rebuild is a new value the owner swaps in.
"""

from __future__ import annotations

import json
import struct
import time
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from . import embedder
from .embedder import FeatureConfig, Projection
from .errors import BuildError, FormatError, QueryError

SOURCE_KINDS = (
    "helpx_doc",
    "community_question",
    "generated_helpx_qa",
    "generated_video_qa",
)

INDEX_MAGIC = b"RFIX"
INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class IndexItem:
    item_id: str
    kind: str
    match_text: str
    embedding: np.ndarray
    question: Optional[str] = None
    answer: Optional[str] = None
    url: Optional[str] = None
    product_tags: tuple[str, ...] = ()

    def payload_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "kind": self.kind,
            "match_text": self.match_text,
            "question": self.question,
            "answer": self.answer,
            "url": self.url,
            "product_tags": list(self.product_tags),
        }


@dataclass(frozen=True)
class RetrievedItem:
    item: IndexItem
    score: float
    rank: int


@dataclass
class Index:
    items: list[IndexItem]
    dim: int
    projection_version: int
    built_at: float
    _matrix: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.items)

    def matrix(self) -> np.ndarray:
        # Scores are computed in float64 so rankings are stable to the last
        # printed digit; embeddings themselves stay float32 on disk.
        if self._matrix is None or self._matrix.shape[0] != len(self.items):
            if self.items:
                self._matrix = np.stack([it.embedding for it in self.items]).astype(
                    np.float64
                )
            else:
                self._matrix = np.zeros((0, self.dim), dtype=np.float64)
        return self._matrix

    def ids(self) -> set[str]:
        return {it.item_id for it in self.items}

    def get(self, item_id: str) -> Optional[IndexItem]:
        for it in self.items:
            if it.item_id == item_id:
                return it
        return None


def _match_text_for(record: Mapping) -> str:
    kind = record.get("kind")
    title = str(record.get("title") or "")
    description = str(record.get("description") or "")
    question = record.get("question")
    if kind == "helpx_doc":
        text = f"{title} {description}".strip()
    else:
        text = str(question or "").strip()
    return text


def item_from_record(record: Mapping) -> tuple[str, dict]:
    """Validate a raw source record; returns (match_text, normalized fields)."""
    item_id = str(record.get("item_id") or "")
    kind = record.get("kind")
    if not item_id:
        raise BuildError("source record missing item_id")
    if kind not in SOURCE_KINDS:
        raise BuildError(f"item {item_id!r}: unknown kind {kind!r}")
    question = record.get("question")
    answer = record.get("answer")
    title = str(record.get("title") or "")
    description = str(record.get("description") or "")
    if kind == "helpx_doc":
        # Docs double as QA pairs downstream: title asks, description answers.
        question = question if question is not None else (title or None)
        answer = answer if answer is not None else (description or None)
    if kind in ("generated_helpx_qa", "generated_video_qa"):
        if not question or not answer:
            raise BuildError(f"item {item_id!r}: generated kinds need question and answer")
    match_text = _match_text_for(record)
    if not match_text:
        raise BuildError(f"item {item_id!r}: empty match text")
    return match_text, {
        "item_id": item_id,
        "kind": kind,
        "question": str(question) if question is not None else None,
        "answer": str(answer) if answer is not None else None,
        "url": str(record["url"]) if record.get("url") is not None else None,
        "product_tags": tuple(sorted(str(t) for t in record.get("product_tags") or ())),
    }


def build(
    records: Iterable[Mapping],
    proj: Projection,
    fcfg: FeatureConfig,
) -> Index:
    """Embed every source record's match text and assemble the index.

    helpx docs embed title + description; QA-shaped kinds embed the
    question text.  Duplicate item_ids abort the build.
    """
    items: list[IndexItem] = []
    seen: set[str] = set()
    for record in records:
        match_text, fields_ = item_from_record(record)
        if fields_["item_id"] in seen:
            raise BuildError(f"duplicate item_id {fields_['item_id']!r}")
        seen.add(fields_["item_id"])
        emb = embedder.embed(match_text, proj, fcfg)
        items.append(IndexItem(match_text=match_text, embedding=emb, **fields_))
    return Index(
        items=items,
        dim=fcfg.dim,
        projection_version=proj.version,
        built_at=time.time(),
    )


def search(
    index: Index,
    query_embedding: np.ndarray,
    k: int,
    product_filter: Optional[set[str]] = None,
) -> list[RetrievedItem]:
    """Exact top-k cosine scan with optional soft product preference."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    q = np.asarray(query_embedding, dtype=np.float64)
    if q.shape != (index.dim,):
        raise QueryError(
            f"query embedding dim {q.shape} does not match index dim {index.dim}"
        )
    if not index.items:
        return []
    scores = index.matrix() @ q
    order = sorted(
        range(len(index.items)),
        key=lambda i: (-float(scores[i]), index.items[i].item_id),
    )
    if product_filter:
        preferred = [
            i for i in order if set(index.items[i].product_tags) & product_filter
        ]
        rest = [i for i in order if not set(index.items[i].product_tags) & product_filter]
        order = preferred + rest
    out = []
    for rank, i in enumerate(order[:k], start=1):
        out.append(RetrievedItem(item=index.items[i], score=float(scores[i]), rank=rank))
    return out


def save(index: Index, path) -> None:
    parts = [
        INDEX_MAGIC,
        struct.pack(
            "<IIIId",
            INDEX_FORMAT_VERSION,
            index.dim,
            len(index.items),
            index.projection_version,
            index.built_at,
        ),
    ]
    for it in index.items:
        payload = json.dumps(it.payload_dict(), ensure_ascii=False, sort_keys=True).encode(
            "utf-8"
        )
        parts.append(struct.pack("<I", len(payload)))
        parts.append(payload)
        parts.append(np.ascontiguousarray(it.embedding, dtype="<f4").tobytes())
    blob = b"".join(parts)
    crc = zlib.crc32(blob) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(blob + struct.pack("<I", crc))


def load(path) -> Index:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 32 or raw[:4] != INDEX_MAGIC:
        magic = raw[:4] if len(raw) >= 4 else raw
        raise FormatError(f"bad index magic {magic!r}, expected {INDEX_MAGIC!r}")
    version, dim, count, proj_version, built_at = struct.unpack("<IIIId", raw[4:28])
    if version != INDEX_FORMAT_VERSION:
        raise FormatError(f"unsupported index format version {version}")
    (crc_stored,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != crc_stored:
        raise FormatError("index file CRC mismatch")
    offset = 28
    items: list[IndexItem] = []
    emb_bytes = dim * 4
    body_end = len(raw) - 4
    for _ in range(count):
        if offset + 4 > body_end:
            raise FormatError("index file truncated inside item table")
        (plen,) = struct.unpack("<I", raw[offset : offset + 4])
        offset += 4
        if offset + plen + emb_bytes > body_end:
            raise FormatError("index file truncated inside item table")
        payload = json.loads(raw[offset : offset + plen].decode("utf-8"))
        offset += plen
        emb = np.frombuffer(raw[offset : offset + emb_bytes], dtype="<f4").copy()
        offset += emb_bytes
        items.append(
            IndexItem(
                item_id=payload["item_id"],
                kind=payload["kind"],
                match_text=payload["match_text"],
                embedding=emb,
                question=payload.get("question"),
                answer=payload.get("answer"),
                url=payload.get("url"),
                product_tags=tuple(payload.get("product_tags") or ()),
            )
        )
    if offset != body_end:
        raise FormatError("index file has trailing bytes")
    return Index(items=items, dim=dim, projection_version=proj_version, built_at=built_at)
