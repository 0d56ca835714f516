"""Map free text to one or more products so vague queries can steer
retrieval.

Matching is alias-based with a longest-match-wins rule over overlapping
spans, so "photoshop express" never also reports "photoshop".  When no
alias matches, per-product keyword fallbacks apply (e.g. "pdf" -> the
configured PDF product).  Confidence is the matched alias length divided
by the longest alias length in the catalog: a deterministic proxy, not a
probability.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Mapping

from .click_ingest import normalize_query
from .errors import ConfigError

METHOD_ALIAS = "alias_match"
METHOD_FALLBACK = "fallback_default"
METHOD_NONE = "none"

MAX_FILTER_PRODUCTS = 2


@dataclass(frozen=True)
class ProductCatalog:
    # alias/keyword -> canonical product, both lowercased
    aliases: Mapping[str, str]
    keywords: Mapping[str, str]
    products: tuple[str, ...]
    max_alias_len: int

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ProductCatalog":
        aliases: dict[str, str] = {}
        keywords: dict[str, str] = {}
        products = []
        for product, entry in raw.items():
            products.append(product)
            alias_list = [product] + list(entry.get("aliases", ()))
            for alias in alias_list:
                norm = normalize_query(alias)
                if not norm:
                    continue
                if norm in aliases and aliases[norm] != product:
                    raise ConfigError(
                        f"alias {norm!r} maps to both {aliases[norm]!r} and {product!r}"
                    )
                aliases[norm] = product
            for kw in entry.get("keywords", ()):
                norm = normalize_query(kw)
                if not norm:
                    continue
                if norm in keywords and keywords[norm] != product:
                    raise ConfigError(
                        f"keyword {norm!r} maps to both {keywords[norm]!r} and {product!r}"
                    )
                keywords[norm] = product
        if not aliases:
            raise ConfigError("product catalog has no aliases")
        return cls(
            aliases=aliases,
            keywords=keywords,
            products=tuple(products),
            max_alias_len=max(len(a) for a in aliases),
        )

    @classmethod
    def load(cls, path) -> "ProductCatalog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class IntentResult:
    products: tuple[tuple[str, float], ...]
    method: str

    def top_products(self, limit: int = MAX_FILTER_PRODUCTS) -> set[str]:
        return {name for name, _ in self.products[:limit]}

    def to_dict(self) -> dict:
        return {
            "products": [[name, conf] for name, conf in self.products],
            "method": self.method,
        }


@dataclass(frozen=True)
class AugmentedQuery:
    query: str
    product_filter: frozenset[str]


def _find_matches(text: str, vocabulary: Mapping[str, str]) -> list[tuple[int, int, str, str]]:
    found = []
    for term, product in vocabulary.items():
        for m in re.finditer(rf"\b{re.escape(term)}\b", text):
            found.append((m.start(), m.end(), term, product))
    return found


def _resolve_overlaps(matches: list[tuple[int, int, str, str]]) -> list[tuple[int, int, str, str]]:
    # Longest span first; a shorter alias inside an accepted span loses.
    ordered = sorted(matches, key=lambda m: (-(m[1] - m[0]), m[0], m[2]))
    accepted: list[tuple[int, int, str, str]] = []
    for cand in ordered:
        if any(cand[0] < a[1] and a[0] < cand[1] for a in accepted):
            continue
        accepted.append(cand)
    return accepted


def detect_products(text: str, catalog: ProductCatalog) -> IntentResult:
    """Deterministic, case-insensitive product detection."""
    norm = normalize_query(text)
    if not norm:
        return IntentResult(products=(), method=METHOD_NONE)

    for vocabulary, method in (
        (catalog.aliases, METHOD_ALIAS),
        (catalog.keywords, METHOD_FALLBACK),
    ):
        matches = _resolve_overlaps(_find_matches(norm, vocabulary))
        if not matches:
            continue
        confidence: dict[str, float] = {}
        for start, end, term, product in matches:
            conf = len(term) / catalog.max_alias_len
            confidence[product] = max(confidence.get(product, 0.0), conf)
        ranked = tuple(
            sorted(confidence.items(), key=lambda kv: (-kv[1], kv[0]))
        )
        return IntentResult(products=ranked, method=method)
    return IntentResult(products=(), method=METHOD_NONE)


def augment_query(query: str, intent: IntentResult) -> AugmentedQuery:
    """Attach the top-confidence product filter; the query text itself is
    passed through byte-identical."""
    return AugmentedQuery(
        query=query,
        product_filter=frozenset(intent.top_products(MAX_FILTER_PRODUCTS)),
    )
