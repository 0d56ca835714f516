import numpy as np
import pytest

from ragforge.product_intent import ProductCatalog
from ragforge.vector_index import Index, IndexItem


@pytest.fixture
def catalog() -> ProductCatalog:
    return ProductCatalog.from_dict(
        {
            "Adobe Acrobat": {"aliases": ["acrobat"], "keywords": ["pdf"]},
            "Adobe Illustrator": {"aliases": ["illustrator"], "keywords": ["vector art"]},
            "Adobe Photoshop": {"aliases": ["photoshop"], "keywords": []},
            "Adobe Photoshop Express": {"aliases": ["photoshop express"], "keywords": []},
            "Adobe Premiere Pro": {"aliases": ["premiere pro"], "keywords": []},
            "Adobe Premiere Rush": {"aliases": ["premiere rush"], "keywords": []},
        }
    )


def unit(vec) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float32)
    return arr / np.linalg.norm(arr)


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    return unit(rng.normal(size=dim))


def make_item(
    item_id: str,
    embedding: np.ndarray,
    kind: str = "helpx_doc",
    match_text: str = "",
    question=None,
    answer=None,
    url=None,
    product_tags=(),
) -> IndexItem:
    return IndexItem(
        item_id=item_id,
        kind=kind,
        match_text=match_text or f"text for {item_id}",
        embedding=np.asarray(embedding, dtype=np.float32),
        question=question,
        answer=answer,
        url=url,
        product_tags=tuple(sorted(product_tags)),
    )


def make_index(items, dim: int, projection_version: int = 1) -> Index:
    return Index(
        items=list(items),
        dim=dim,
        projection_version=projection_version,
        built_at=1700000000.0,
    )
