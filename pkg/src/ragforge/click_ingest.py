"""Click-log ingestion: parse raw query->document click lines and turn them
into graded retriever training pairs.

The relevance signal for a (query, doc) pair is the click ratio

    ratio = clicks(q -> d) / max(clicks(q -> D))

where D ranges over all docs clicked for that query.  The natural log of the
ratio is stored alongside it; the training weight is the ratio itself, so the
max-clicked doc of every query carries weight 1.0 and every other clicked doc
a weight in (0, 1).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Union

from .data import Document
from .errors import EmptyInputError

_WS = re.compile(r"\s+")


def normalize_query(query: str) -> str:
    """Trim, lowercase, and collapse internal whitespace."""
    return _WS.sub(" ", query.strip().lower())


@dataclass(frozen=True)
class ClickRecord:
    query: str
    doc_id: str
    clicks: int


@dataclass(frozen=True)
class TrainingPair:
    """One graded (query, document) training example.

    ``ratio`` is the click ratio in (0, 1]; ``log_ratio`` its natural log
    (<= 0, and 0 exactly for the max-clicked doc); ``weight`` equals the
    ratio and feeds the weighted training loss.
    """

    query: str
    doc_text: str
    ratio: float
    log_ratio: float
    weight: float

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "doc_text": self.doc_text,
            "ratio": self.ratio,
            "log_ratio": self.log_ratio,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "TrainingPair":
        return cls(
            query=str(row["query"]),
            doc_text=str(row["doc_text"]),
            ratio=float(row["ratio"]),
            log_ratio=float(row["log_ratio"]),
            weight=float(row["weight"]),
        )


@dataclass
class ClickLogParse:
    records: list[ClickRecord]
    skipped: int
    zero_click_groups: int = 0


@dataclass
class RelevanceResult:
    pairs: list[TrainingPair]
    skipped_docs: int


def _parse_line(line: str) -> Union[ClickRecord, None]:
    try:
        row = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(row, dict):
        return None
    query = row.get("query")
    doc_id = row.get("doc_id")
    clicks = row.get("clicks")
    if not isinstance(query, str) or not isinstance(doc_id, str) or not doc_id:
        return None
    if isinstance(clicks, bool) or not isinstance(clicks, int) or clicks < 0:
        return None
    norm = normalize_query(query)
    if not norm:
        return None
    return ClickRecord(query=norm, doc_id=doc_id, clicks=clicks)


def parse_click_log(stream: Union[IO[str], Iterable[str]]) -> ClickLogParse:
    """Parse a JSONL click log into aggregated ClickRecords.

    Malformed lines are skipped and counted.  Duplicate (query, doc_id)
    lines have their clicks summed; groups summing to zero clicks are
    dropped.  Raises EmptyInputError when no line was usable.
    """
    totals: dict[tuple[str, str], int] = {}
    skipped = 0
    saw_valid = False
    for line in stream:
        if not line.strip():
            skipped += 1
            continue
        rec = _parse_line(line)
        if rec is None:
            skipped += 1
            continue
        saw_valid = True
        key = (rec.query, rec.doc_id)
        totals[key] = totals.get(key, 0) + rec.clicks
    if not saw_valid:
        raise EmptyInputError("click log contained zero valid lines")
    records = []
    zero_groups = 0
    for (query, doc_id), clicks in totals.items():
        if clicks == 0:
            zero_groups += 1
            continue
        records.append(ClickRecord(query=query, doc_id=doc_id, clicks=clicks))
    records.sort(key=lambda r: (r.query, r.doc_id))
    return ClickLogParse(records=records, skipped=skipped, zero_click_groups=zero_groups)


def compute_relevance(
    records: list[ClickRecord],
    docs: Mapping[str, Document],
) -> RelevanceResult:
    """Compute click-ratio relevance per query group.

    Records whose doc_id is not resolvable in ``docs`` are skipped (and
    counted) before aggregation, so the per-query max is always taken over
    docs that actually produce pairs: every query group keeps at least one
    pair with ratio exactly 1.0.
    """
    if not records:
        raise EmptyInputError("no click records to grade")
    skipped = 0
    by_query: dict[str, list[ClickRecord]] = {}
    for rec in records:
        if rec.doc_id not in docs:
            skipped += 1
            continue
        by_query.setdefault(rec.query, []).append(rec)

    pairs: list[TrainingPair] = []
    for query in sorted(by_query):
        group = by_query[query]
        max_clicks = max(r.clicks for r in group)
        for rec in sorted(group, key=lambda r: r.doc_id):
            ratio = rec.clicks / max_clicks
            pairs.append(
                TrainingPair(
                    query=query,
                    doc_text=docs[rec.doc_id].combined_text,
                    ratio=ratio,
                    log_ratio=math.log(ratio),
                    weight=ratio,
                )
            )
    return RelevanceResult(pairs=pairs, skipped_docs=skipped)
