"""Dual-layer PII removal for community-sourced text.

Layer 1 is regex-based: emails, phone numbers in common international
formats, and two-line signature blocks are replaced by category
placeholders.  Layer 2 delegates PERSON detection to a pluggable NER
provider; a dictionary-backed provider ships for tests.  The regex layer
always runs first so the provider never sees raw emails or phones.

Phone matching is deliberately conservative: a candidate digit run is only
redacted when it carries 7-15 digits AND looks dialable (leading "+", a
parenthesized group, or at least two separator groups).  Plain integers,
years, and version strings stay untouched; the fixture file in the test
suite defines the supported format list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

from .errors import RecordError, SanitizeError

EMAIL_PLACEHOLDER = "[EMAIL]"
PHONE_PLACEHOLDER = "[PHONE]"
SIGNATURE_PLACEHOLDER = "[SIGNATURE]"
PERSON_PLACEHOLDER = "[PERSON]"

DEFAULT_SIGNATURE_CLOSERS = ("Regards", "Thanks", "Best")

EMAIL_RE = re.compile(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b")

# Broad candidate; _looks_like_phone() decides whether to redact.
PHONE_CANDIDATE_RE = re.compile(
    r"(?<![\w@.+-])\+?(?:\(\d{1,4}\)|\d)[\d ().\-]{4,18}\d(?![\w-])"
)

_SEPARATOR_RE = re.compile(r"[ .\-]")
_NAME_LINE_RE = re.compile(r"^[A-Za-z][A-Za-z.'-]*(?: [A-Za-z][A-Za-z.'-]*){0,3}$")


@dataclass(frozen=True)
class Redaction:
    """One replaced span; offsets refer to the text the scrub ran on."""

    start: int
    end: int
    category: str
    replacement: str


class NerProvider(Protocol):
    name: str

    def detect(self, text: str) -> list[tuple[tuple[int, int], str]]:
        """Return ((start, end), label) spans; label is always PERSON."""
        ...


class DictionaryNerProvider:
    """Exact-name PERSON detector backed by a fixed name list."""

    def __init__(self, names: Iterable[str]):
        self.name = "dictionary"
        self._names = sorted({n for n in names if n}, key=len, reverse=True)
        if self._names:
            joined = "|".join(re.escape(n) for n in self._names)
            self._pattern = re.compile(rf"\b(?:{joined})\b")
        else:
            self._pattern = None

    def detect(self, text: str) -> list[tuple[tuple[int, int], str]]:
        if self._pattern is None:
            return []
        return [((m.start(), m.end()), "PERSON") for m in self._pattern.finditer(text)]


def _looks_like_phone(candidate: str) -> bool:
    digits = sum(ch.isdigit() for ch in candidate)
    if not 7 <= digits <= 15:
        return False
    if candidate.lstrip().startswith("+") or "(" in candidate:
        return True
    return len(_SEPARATOR_RE.findall(candidate.strip())) >= 2


def _signature_spans(text: str, closers: Sequence[str]) -> list[tuple[int, int]]:
    """Spans covering a closer line plus the short name line that follows."""
    spans = []
    lines = text.split("\n")
    offsets = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line) + 1
    closer_re = re.compile(rf"^\s*(?:{'|'.join(re.escape(c) for c in closers)}),\s*$")
    for i in range(len(lines) - 1):
        if not closer_re.match(lines[i]):
            continue
        name_line = lines[i + 1].strip()
        if not name_line or len(name_line) > 40:
            continue
        if not _NAME_LINE_RE.match(name_line):
            continue
        start = offsets[i] + len(lines[i]) - len(lines[i].lstrip())
        end = offsets[i + 1] + len(lines[i + 1].rstrip())
        spans.append((start, end))
    return spans


def _apply_redactions(text: str, redactions: list[Redaction]) -> str:
    out = []
    cursor = 0
    for red in redactions:
        out.append(text[cursor : red.start])
        out.append(red.replacement)
        cursor = red.end
    out.append(text[cursor:])
    return "".join(out)


def regex_scrub(
    text: str, closers: Sequence[str] = DEFAULT_SIGNATURE_CLOSERS
) -> tuple[str, list[Redaction]]:
    """Replace emails, phone numbers, and signature blocks with placeholders.

    Returned spans refer to the original text, are sorted, and never
    overlap; emails win over phones, both win over signatures.
    """
    candidates: list[Redaction] = []
    for m in EMAIL_RE.finditer(text):
        candidates.append(Redaction(m.start(), m.end(), "email", EMAIL_PLACEHOLDER))
    for m in PHONE_CANDIDATE_RE.finditer(text):
        if _looks_like_phone(m.group()):
            candidates.append(Redaction(m.start(), m.end(), "phone", PHONE_PLACEHOLDER))
    for start, end in _signature_spans(text, closers):
        candidates.append(Redaction(start, end, "signature", SIGNATURE_PLACEHOLDER))

    accepted: list[Redaction] = []
    # Earlier categories take precedence on overlap.
    for red in candidates:
        if any(red.start < other.end and other.start < red.end for other in accepted):
            continue
        accepted.append(red)
    accepted.sort(key=lambda r: r.start)
    return _apply_redactions(text, accepted), accepted


def _merge_spans(spans: list[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[tuple[int, int]] = []
    for start, end in sorted(spans):
        if merged and start < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def ner_scrub(text: str, provider: NerProvider) -> tuple[str, list[Redaction]]:
    """Replace provider-detected PERSON spans; overlaps are merged first.

    On any provider failure the original text is returned untouched via the
    raised error, never a partially scrubbed string.
    """
    try:
        detections = provider.detect(text)
    except Exception as exc:
        raise SanitizeError(f"NER provider {provider.name!r} failed: {exc}") from exc
    spans = []
    for (start, end), label in detections:
        if label != "PERSON":
            continue
        if not (0 <= start < end <= len(text)):
            raise SanitizeError(
                f"NER provider {provider.name!r} returned out-of-bounds span ({start}, {end})"
            )
        spans.append((start, end))
    redactions = [
        Redaction(start, end, "person", PERSON_PLACEHOLDER)
        for start, end in _merge_spans(spans)
    ]
    return _apply_redactions(text, redactions), redactions


@dataclass
class SanitizeReport:
    counts: dict[str, int] = field(default_factory=dict)
    processed: int = 0
    skipped: int = 0

    def add(self, redactions: Iterable[Redaction]) -> None:
        for red in redactions:
            self.counts[red.category] = self.counts.get(red.category, 0) + 1

    def merge(self, other: "SanitizeReport") -> None:
        for category, count in other.counts.items():
            self.counts[category] = self.counts.get(category, 0) + count
        self.processed += other.processed
        self.skipped += other.skipped

    def to_dict(self) -> dict:
        return {
            "counts": dict(sorted(self.counts.items())),
            "processed": self.processed,
            "skipped": self.skipped,
        }


def sanitize_text(text: str, provider: NerProvider) -> tuple[str, list[Redaction]]:
    """Regex layer then NER layer; redactions from both, in pass order."""
    clean, reds = regex_scrub(text)
    clean2, ner_reds = ner_scrub(clean, provider)
    return clean2, reds + ner_reds


def sanitize_record(
    record: Mapping,
    fields: Sequence[str],
    provider: NerProvider,
    report: SanitizeReport | None = None,
) -> dict:
    """Scrub the named fields of one keyed record; other fields untouched."""
    for name in fields:
        if name not in record:
            raise RecordError(f"record is missing field {name!r}")
    out = dict(record)
    all_reds: list[Redaction] = []
    for name in fields:
        clean, reds = sanitize_text(str(record[name]), provider)
        out[name] = clean
        all_reds.extend(reds)
    if report is not None:
        report.add(all_reds)
        report.processed += 1
    return out


def sanitize_records(
    records: Iterable[Mapping],
    fields: Sequence[str],
    provider: NerProvider,
) -> tuple[list[dict], SanitizeReport]:
    report = SanitizeReport()
    out = []
    for record in records:
        try:
            out.append(sanitize_record(record, fields, provider, report))
        except RecordError:
            report.skipped += 1
    return out, report
