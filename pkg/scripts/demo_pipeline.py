#!/usr/bin/env python3
"""Product-disambiguation demo on a handcrafted mini corpus.

Asks the same vague query with and without intent detection and prints
both answer bundles, showing how the pdf keyword routes retrieval to the
Acrobat-tagged item instead of the Illustrator one.

Usage:
    python scripts/demo_pipeline.py
"""

import json

import numpy as np

from ragforge import vector_index
from ragforge.embedder import FeatureConfig, Projection
from ragforge.llm_client import ScriptedProvider
from ragforge.product_intent import ProductCatalog
from ragforge.rag_pipeline import RagEngine

RECORDS = [
    {
        "item_id": "illu-blank",
        "kind": "generated_helpx_qa",
        "question": "how do I create a blank PDF from a template",
        "answer": "Select File > New From Template and open the Blank Templates folder. "
        "Illustrator creates a new document based on the selected blank template.",
        "product_tags": ["Adobe Illustrator"],
    },
    {
        "item_id": "acro-blank",
        "kind": "generated_helpx_qa",
        "question": "How to create a blank PDF",
        "answer": "1. Open Acrobat and choose Tools > Create PDF.\n2. Click Blank Page.\n"
        "3. Select the size of your blank page.\n4. Click Create.",
        "product_tags": ["Adobe Acrobat"],
    },
    {
        "item_id": "indesign-blank",
        "kind": "helpx_doc",
        "title": "Create new documents in InDesign",
        "description": "Start from a blank document preset or a shared template.",
        "product_tags": ["Adobe InDesign"],
    },
]

CATALOG = {
    "Adobe Acrobat": {"aliases": ["acrobat"], "keywords": ["pdf"]},
    "Adobe Illustrator": {"aliases": ["illustrator"], "keywords": []},
    "Adobe InDesign": {"aliases": ["indesign"], "keywords": []},
}

QUERY = "how do I create a blank PDF"


def build_engine(with_catalog: bool) -> RagEngine:
    fcfg = FeatureConfig(dim=64)
    proj = Projection(matrix=np.eye(64))
    return RagEngine(
        index=vector_index.build(RECORDS, proj, fcfg),
        projection=proj,
        fcfg=fcfg,
        catalog=ProductCatalog.from_dict(CATALOG) if with_catalog else None,
        client=ScriptedProvider(
            script=[
                "To create a blank PDF, open Acrobat, choose Tools > Create PDF, "
                "click Blank Page, pick a size, and click Create."
            ]
        ),
    )


def show(label: str, bundle) -> None:
    print(f"=== {label} ===")
    print(f"detected products: {bundle.products.to_dict()}")
    print("retrieved order:", [ri.item.item_id for ri in bundle.used_items])
    print(f"answer: {bundle.answer}")
    print()


def main():
    without = build_engine(with_catalog=False).answer(QUERY)
    show("without product identifier", without)
    with_intent = build_engine(with_catalog=True).answer(QUERY)
    show("with product identifier", with_intent)
    print("full trace of the disambiguated turn:")
    print(json.dumps(with_intent.to_dict(include_timings=False), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
