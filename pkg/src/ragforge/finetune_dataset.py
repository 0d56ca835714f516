"""Compile retrieval-aware finetuning records.

Each answerable record carries the grounded document (the source its QA
pair was generated from) plus that document's nearest index neighbors as
positives, and negatives sampled uniformly from the mid-similarity band
[tau_dissim, tau_sim) around the grounded document: dissimilar enough to
be wrong, similar enough to be tempting.  A seeded fraction of records is
converted to unanswerable samples (no positives, refusal answer) so the
finetuned model learns to decline when grounding is absent.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInputError
from .rag_pipeline import UNANSWERABLE
from .vector_index import Index, IndexItem

BAND_EPS = 1e-9


@dataclass(frozen=True)
class FinetuneConfig:
    min_answer_tokens: int = 90
    top_k_positives: int = 2
    negatives_per_sample: int = 3
    tau_sim: float = 0.6
    tau_dissim: float = 0.2
    unanswerable_fraction: float = 0.1
    rng_seed: int = 42

    def __post_init__(self):
        if not 0 <= self.tau_dissim < self.tau_sim <= 1:
            raise ValueError("need 0 <= tau_dissim < tau_sim <= 1")
        if not 0 <= self.unanswerable_fraction <= 1:
            raise ValueError("unanswerable_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str
    source_doc_id: str


@dataclass
class FinetuneRecord:
    question: str
    answer: str
    positives: list[str]
    negatives: list[str]
    answerable: bool
    underfilled: bool = False

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "positives": self.positives,
            "negatives": self.negatives,
            "answerable": self.answerable,
            "underfilled": self.underfilled,
        }


def filter_short_answers(
    pairs: Sequence[QAPair], cfg: FinetuneConfig
) -> tuple[list[QAPair], int]:
    """Keep pairs whose answer has at least min_answer_tokens whitespace
    tokens (boundary inclusive)."""
    kept = [p for p in pairs if len(p.answer.split()) >= cfg.min_answer_tokens]
    return kept, len(pairs) - len(kept)


def _similarities(index: Index, anchor: IndexItem) -> np.ndarray:
    return index.matrix() @ np.asarray(anchor.embedding, dtype=np.float32)


def select_positives(
    pair: QAPair, index: Index, cfg: FinetuneConfig
) -> Optional[list[IndexItem]]:
    """Grounded document first, then its top (k-1) nearest index neighbors.

    Returns None when the grounded document is missing from the index; the
    caller skips the record with a reason.
    """
    anchor = index.get(pair.source_doc_id)
    if anchor is None:
        return None
    positives = [anchor]
    if cfg.top_k_positives > 1:
        sims = _similarities(index, anchor)
        order = sorted(
            (i for i, it in enumerate(index.items) if it.item_id != anchor.item_id),
            key=lambda i: (-float(sims[i]), index.items[i].item_id),
        )
        for i in order[: cfg.top_k_positives - 1]:
            positives.append(index.items[i])
    return positives


def band_item_ids(
    index: Index, anchor: IndexItem, cfg: FinetuneConfig, exclude: set[str]
) -> list[str]:
    """Ids whose cosine to the anchor lies in [tau_dissim, tau_sim)."""
    sims = _similarities(index, anchor)
    out = []
    for i, it in enumerate(index.items):
        if it.item_id in exclude:
            continue
        sim = float(sims[i])
        if sim >= cfg.tau_dissim - BAND_EPS and sim < cfg.tau_sim:
            out.append(it.item_id)
    return sorted(out)


def sample_negatives(
    pair: QAPair,
    index: Index,
    cfg: FinetuneConfig,
    rng: np.random.Generator,
    positives: Optional[Sequence[IndexItem]] = None,
) -> tuple[list[IndexItem], bool]:
    """Uniform seeded sampling without replacement from the similarity band.

    Never returns an item that is also a positive.  When the band holds
    fewer than negatives_per_sample items the record is flagged
    under-filled but kept.
    """
    anchor = index.get(pair.source_doc_id)
    if anchor is None:
        return [], True
    if positives is None:
        positives = select_positives(pair, index, cfg) or [anchor]
    exclude = {it.item_id for it in positives}
    band = band_item_ids(index, anchor, cfg, exclude)
    take = min(cfg.negatives_per_sample, len(band))
    chosen = sorted(rng.choice(len(band), size=take, replace=False).tolist()) if take else []
    by_id = {it.item_id: it for it in index.items}
    return [by_id[band[i]] for i in chosen], take < cfg.negatives_per_sample


@dataclass
class BuildReport:
    total: int = 0
    answerable: int = 0
    unanswerable: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)
    underfilled: int = 0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "answerable": self.answerable,
            "unanswerable": self.unanswerable,
            "skipped": [list(s) for s in self.skipped],
            "underfilled": self.underfilled,
        }


def build_dataset(
    pairs: Sequence[QAPair], index: Index, cfg: FinetuneConfig
) -> tuple[list[FinetuneRecord], BuildReport]:
    """Assemble finetuning records; deterministic for a fixed seed.

    Pairs are expected to have passed the length filter already.  The RNG
    is split per record index, so per-record sampling is stable regardless
    of processing order.
    """
    if not pairs:
        raise EmptyInputError("no QA pairs to build from")
    report = BuildReport()
    records: list[FinetuneRecord] = []
    for i, pair in enumerate(pairs):
        positives = select_positives(pair, index, cfg)
        if positives is None:
            report.skipped.append((pair.source_doc_id, "grounded doc missing from index"))
            continue
        rng = np.random.default_rng([cfg.rng_seed, i])
        negatives, underfilled = sample_negatives(pair, index, cfg, rng, positives)
        if underfilled:
            report.underfilled += 1
        records.append(
            FinetuneRecord(
                question=pair.question,
                answer=pair.answer,
                positives=[it.match_text for it in positives],
                negatives=[it.match_text for it in negatives],
                answerable=True,
                underfilled=underfilled,
            )
        )

    n_convert = int(round(cfg.unanswerable_fraction * len(records)))
    if n_convert:
        eligible = [i for i, rec in enumerate(records) if rec.negatives]
        conv_rng = np.random.default_rng([cfg.rng_seed, len(records), 0xC0DE])
        chosen = conv_rng.choice(len(eligible), size=min(n_convert, len(eligible)), replace=False)
        for pos in sorted(chosen.tolist()):
            rec = records[eligible[pos]]
            rec.positives = []
            rec.answer = UNANSWERABLE
            rec.answerable = False

    report.total = len(records)
    report.answerable = sum(1 for r in records if r.answerable)
    report.unanswerable = report.total - report.answerable
    return records, report


DEFAULT_SAMPLE_TEMPLATE = (
    "Context documents:\n"
    "{context}\n"
    "\n"
    "Question: {question}\n"
    "Answer: {answer}"
)


def _stable_shuffle_seed(text: str, seed: int) -> int:
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return (int.from_bytes(digest, "little") ^ seed) & 0xFFFFFFFFFFFFFFFF


def render_training_sample(
    record: FinetuneRecord,
    template: str = DEFAULT_SAMPLE_TEMPLATE,
    seed: int = 0,
) -> str:
    """Render one training sample: seeded interleaving of positive and
    negative context blocks, then the question, then the target answer."""
    blocks = list(record.positives) + list(record.negatives)
    rng = np.random.default_rng(_stable_shuffle_seed(record.question, seed))
    order = rng.permutation(len(blocks)) if blocks else []
    rendered = "\n\n".join(
        f"[Document {n}]\n{blocks[i]}" for n, i in enumerate(order, start=1)
    )
    return template.format(
        context=rendered,
        question=record.question,
        answer=record.answer,
    )
