"""Shared document record and JSONL helpers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator


@dataclass(frozen=True)
class Document:
    """A retrievable source item.

    ``title + description`` is the retrieval-facing text; ``body`` (when
    present) is the longer text QA generation works from.
    """

    doc_id: str
    title: str = ""
    description: str = ""
    body: str = ""
    product_tags: tuple[str, ...] = ()

    @property
    def combined_text(self) -> str:
        return f"{self.title} {self.description}".strip()

    def generation_text(self) -> str:
        return self.body.strip() or self.combined_text


def read_jsonl(path) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path, rows: Iterable[dict[str, Any]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n


def document_from_dict(row: dict[str, Any]) -> Document:
    return Document(
        doc_id=str(row["doc_id"]),
        title=str(row.get("title", "")),
        description=str(row.get("description", "")),
        body=str(row.get("body", "")),
        product_tags=tuple(row.get("product_tags", ()) or ()),
    )


def document_to_dict(doc: Document) -> dict[str, Any]:
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "description": doc.description,
        "body": doc.body,
        "product_tags": sorted(doc.product_tags),
    }


def load_documents(path) -> list[Document]:
    return [document_from_dict(row) for row in read_jsonl(path)]
