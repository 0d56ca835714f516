"""Question-answer pair generation from documents via few-shot prompting.

The generation prompt asks the model to mark every question with a line
starting QUESTION and every answer with a line starting ANSWER; parsing
splits on exactly those markers, so answers keep their numbered-step lines
verbatim.  Generation over a corpus is resumable: document ids already in
the output sink are never sent to the model again.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .data import Document
from .errors import InputError, MarkerParseError, RagforgeError
from .llm_client import CompletionRequest, LlmProvider

log = logging.getLogger(__name__)

DEFAULT_QA_SYSTEM_TEXT = (
    "You are an AI assistant that helps create question-answer pairs. "
    "You start every question with QUESTION and every answer with ANSWER. "
    "Answer in detail."
)

QUESTION_MARKER_RE = re.compile(r"^QUESTION(?=:|\s|$):?[ \t]*(.*)$")
ANSWER_MARKER_RE = re.compile(r"^ANSWER(?=:|\s|$):?[ \t]*(.*)$")

MAX_PROMPT_DOC_WORDS = 2000


@dataclass(frozen=True)
class Exemplar:
    document: str
    question: str
    answer: str


@dataclass(frozen=True)
class QAGenPrompt:
    system_text: str
    exemplars: tuple[Exemplar, ...]
    target_document: str

    def render(self) -> str:
        blocks = [self.system_text]
        for ex in self.exemplars:
            blocks.append(
                f"Document:\n{ex.document}\n\nQUESTION: {ex.question}\nANSWER: {ex.answer}"
            )
        blocks.append(f"Document:\n{self.target_document}\n")
        return "\n\n".join(blocks)


@dataclass(frozen=True)
class GeneratedQA:
    question: str
    answer: str
    source_doc_id: str
    generator: str

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "source_doc_id": self.source_doc_id,
            "generator": self.generator,
        }


def chunk_text(text: str, max_words: int = MAX_PROMPT_DOC_WORDS) -> list[str]:
    """Split long text into whole-word windows so each prompt stays bounded."""
    words = text.split()
    if len(words) <= max_words:
        return [text]
    return [
        " ".join(words[start : start + max_words])
        for start in range(0, len(words), max_words)
    ]


def build_prompt(
    doc: Document,
    exemplars: Sequence[Exemplar] = (),
    template: str = DEFAULT_QA_SYSTEM_TEXT,
    chunk: Optional[str] = None,
) -> QAGenPrompt:
    text = chunk if chunk is not None else doc.generation_text()
    if not text:
        raise InputError(f"document {doc.doc_id!r} has no text to generate from")
    words = text.split()
    if len(words) > MAX_PROMPT_DOC_WORDS:
        text = " ".join(words[:MAX_PROMPT_DOC_WORDS])
    return QAGenPrompt(
        system_text=template,
        exemplars=tuple(exemplars),
        target_document=text,
    )


@dataclass
class MarkerParse:
    pairs: list[tuple[str, str]]
    dropped_unpaired: int = 0


def parse_qa_markers(llm_output: str) -> MarkerParse:
    """Split model output on line-start QUESTION/ANSWER markers.

    Markers are case-sensitive with an optional trailing colon; matching at
    line starts only keeps a mid-sentence "QUESTION" from splitting an
    answer.  An unpaired trailing QUESTION is dropped (and counted); an
    ANSWER with no open question is a structural failure.
    """
    pairs: list[tuple[str, str]] = []
    dropped = 0
    question_lines: Optional[list[str]] = None
    answer_lines: Optional[list[str]] = None

    def close_pair():
        nonlocal question_lines, answer_lines
        if question_lines is not None and answer_lines is not None:
            q = "\n".join(question_lines).strip()
            a = "\n".join(answer_lines).strip()
            if q and a:
                pairs.append((q, a))
        question_lines = None
        answer_lines = None

    for line in llm_output.split("\n"):
        qm = QUESTION_MARKER_RE.match(line)
        am = ANSWER_MARKER_RE.match(line)
        if qm:
            if question_lines is not None and answer_lines is None:
                dropped += 1  # question with no answer, superseded
                question_lines = None
            close_pair()
            question_lines = [qm.group(1)]
        elif am:
            if question_lines is None:
                raise MarkerParseError("ANSWER marker before any QUESTION", llm_output)
            if answer_lines is not None:
                raise MarkerParseError("two ANSWER markers for one QUESTION", llm_output)
            answer_lines = [am.group(1)]
        elif answer_lines is not None:
            answer_lines.append(line)
        elif question_lines is not None:
            question_lines.append(line)
    if question_lines is not None and answer_lines is None:
        dropped += 1
    close_pair()
    if not pairs:
        raise MarkerParseError("no QUESTION/ANSWER pairs found", llm_output)
    return MarkerParse(pairs=pairs, dropped_unpaired=dropped)


def render_qa_markers(pairs: Sequence[tuple[str, str]]) -> str:
    return "\n".join(f"QUESTION: {q}\nANSWER: {a}" for q, a in pairs)


@dataclass
class GenerationReport:
    ok: int = 0
    failed: int = 0
    skipped: int = 0
    pairs_written: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)


def _existing_doc_ids(path: Path) -> set[str]:
    if not path.exists():
        return set()
    done = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                done.add(json.loads(line)["source_doc_id"])
    return done


def generate_for_corpus(
    docs: Sequence[Document],
    client: LlmProvider,
    out_path,
    exemplars: Sequence[Exemplar] = (),
    template: str = DEFAULT_QA_SYSTEM_TEXT,
    max_per_doc: int = 8,
    max_tokens: int = 1024,
) -> GenerationReport:
    """Generate QA pairs for every new document and append them to the sink.

    Per-document failures (unparseable output, missing fixtures) are
    recorded and the run continues; ok + failed + skipped always equals
    len(docs).
    """
    if not docs:
        raise RagforgeError("no documents to generate from")
    out_path = Path(out_path)
    done = _existing_doc_ids(out_path)
    report = GenerationReport()
    with open(out_path, "a", encoding="utf-8") as sink:
        for doc in docs:
            if doc.doc_id in done:
                report.skipped += 1
                continue
            # Long texts (video transcripts especially) go out as one call
            # per bounded chunk; the doc counts as ok when any chunk parses.
            pairs: list[tuple[str, str]] = []
            errors: list[str] = []
            provider_name = ""
            for chunk in chunk_text(doc.generation_text()) or [""]:
                if len(pairs) >= max_per_doc:
                    break
                try:
                    prompt = build_prompt(doc, exemplars, template, chunk=chunk or None)
                    result = client.complete(
                        CompletionRequest(prompt=prompt.render(), max_tokens=max_tokens)
                    )
                    provider_name = result.provider
                    pairs.extend(parse_qa_markers(result.samples[0]).pairs)
                except RagforgeError as exc:
                    errors.append(str(exc))
            if not pairs:
                report.failed += 1
                reason = "; ".join(errors) or "no pairs generated"
                report.failures.append((doc.doc_id, reason))
                log.warning("generation failed for %s: %s", doc.doc_id, reason)
                continue
            for q, a in pairs[:max_per_doc]:
                record = GeneratedQA(
                    question=q,
                    answer=a,
                    source_doc_id=doc.doc_id,
                    generator=provider_name,
                )
                sink.write(json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
                report.pairs_written += 1
            done.add(doc.doc_id)
            report.ok += 1
    return report
