"""Retrieval and answer-quality evaluation, plus a synthetic click corpus.

nDCG uses graded relevance (the click ratio of each relevant doc) with a
linear gain and log2 rank discount; rankings are computed against the full
index, not just the evaluation batch.  The synthetic generator builds a
topic-structured corpus whose query and document vocabularies are disjoint,
so an untrained lexical-hash tower scores near chance and any gain has to
come from the trained projection.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import embedder, vector_index
from .click_ingest import ClickRecord
from .data import Document
from .embedder import FeatureConfig, Projection
from .errors import EvaluationError, JudgeError
from .llm_client import CompletionRequest, LlmProvider
from .vector_index import Index


@dataclass(frozen=True)
class EvalQuery:
    query: str
    relevant: Mapping[str, float]  # doc_id -> grade in (0, 1]


def ndcg_at_k(ranked: Sequence[str], grades: Mapping[str, float], k: int) -> float:
    """Graded nDCG with gain(doc) = grade / log2(rank + 1).

    Non-relevant docs contribute zero gain; IDCG places grades in
    descending order.  Defined as 0 when there is nothing relevant to
    rank (IDCG = 0).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    dcg = 0.0
    for pos, doc_id in enumerate(ranked[:k], start=1):
        grade = grades.get(doc_id, 0.0)
        if grade:
            dcg += grade / math.log2(pos + 1)
    ideal = sorted(grades.values(), reverse=True)[:k]
    idcg = sum(g / math.log2(pos + 1) for pos, g in enumerate(ideal, start=1))
    if idcg == 0.0:
        return 0.0
    return dcg / idcg


@dataclass
class EvalReport:
    mean_ndcg: float
    k: int
    per_query: list[tuple[str, float]]

    def to_dict(self) -> dict:
        return {
            "mean_ndcg": self.mean_ndcg,
            "k": self.k,
            "per_query": [{"query": q, "ndcg": s} for q, s in self.per_query],
        }

    def table(self) -> str:
        lines = [f"{'query':<48}  nDCG@{self.k}"]
        for q, s in self.per_query:
            label = q if len(q) <= 48 else q[:45] + "..."
            lines.append(f"{label:<48}  {s:.4f}")
        lines.append(f"{'MEAN':<48}  {self.mean_ndcg:.4f}")
        return "\n".join(lines)


def evaluate_retriever(
    index: Index,
    proj: Projection,
    fcfg: FeatureConfig,
    eval_set: Sequence[EvalQuery],
    k: int = 10,
) -> EvalReport:
    """Embed each eval query, rank the full index, and average nDCG@k."""
    known = index.ids()
    for eq in eval_set:
        for doc_id in eq.relevant:
            if doc_id not in known:
                raise EvaluationError(f"eval query references unknown doc_id {doc_id!r}")
    per_query = []
    for eq in eval_set:
        emb = embedder.embed(eq.query, proj, fcfg)
        hits = vector_index.search(index, emb, k)
        ranked = [h.item.item_id for h in hits]
        per_query.append((eq.query, ndcg_at_k(ranked, eq.relevant, k)))
    mean = sum(s for _, s in per_query) / len(per_query) if per_query else 0.0
    return EvalReport(mean_ndcg=mean, k=k, per_query=per_query)


# --- synthetic corpus -------------------------------------------------------

EVAL_HOLDOUT_FRACTION = 0.07
CLICKS_PER_QUERY = 100
AFFINITY_TRUE = 2.0
AFFINITY_SAME_TOPIC_BASE = 1.0
POPULARITY_SPAN = 0.8  # same-topic affinity stays strictly below the true doc's
AFFINITY_CROSS_TOPIC = -2.0


@dataclass(frozen=True)
class SynthConfig:
    topics: int = 10
    vocab_per_topic: int = 12
    queries_per_topic: int = 40
    docs_per_topic: int = 30
    noise_tokens: int = 40
    click_temperature: float = 0.7
    rng_seed: int = 42

    def __post_init__(self):
        for name in (
            "topics",
            "vocab_per_topic",
            "queries_per_topic",
            "docs_per_topic",
            "noise_tokens",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.click_temperature <= 0:
            raise ValueError("click_temperature must be positive")


@dataclass
class SynthCorpus:
    documents: list[Document]
    clicks: list[ClickRecord]
    eval_queries: list[EvalQuery]
    true_doc: dict[str, str]  # query -> the doc its topic intends
    affinities: dict[str, np.ndarray] = field(default_factory=dict, repr=False)


def _fresh_tokens(rng: np.random.Generator, count: int, taken: set[str]) -> list[str]:
    letters = "abcdefghijklmnopqrstuvwxyz"
    out = []
    while len(out) < count:
        length = int(rng.integers(5, 9))
        token = "".join(letters[i] for i in rng.integers(0, 26, size=length))
        if token not in taken:
            taken.add(token)
            out.append(token)
    return out


def synth_clicks(cfg: SynthConfig) -> SynthCorpus:
    """Generate topic-structured docs, queries, and a click log.

    Query and document vocabularies are disjoint (per topic), so lexical
    hashing alone cannot connect them; clicks are the only bridge.  Every
    query has one designated true doc whose affinity strictly dominates;
    other same-topic docs carry a per-doc popularity affinity below it and
    cross-topic docs a strongly negative one.  Click counts are multinomial
    with probability proportional to softmax(affinity / click_temperature),
    so as the temperature goes to zero all clicks collapse onto the true
    doc.  About 7% of queries are held out as the eval split and excluded
    from the returned click log.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    taken: set[str] = set()
    doc_vocab = [_fresh_tokens(rng, cfg.vocab_per_topic, taken) for _ in range(cfg.topics)]
    query_vocab = [_fresh_tokens(rng, cfg.vocab_per_topic, taken) for _ in range(cfg.topics)]
    noise_vocab = _fresh_tokens(rng, cfg.noise_tokens, taken)

    documents: list[Document] = []
    doc_topic: list[int] = []
    for t in range(cfg.topics):
        for d in range(cfg.docs_per_topic):
            vocab = doc_vocab[t]
            title = " ".join(vocab[int(i)] for i in rng.integers(0, len(vocab), size=3))
            body_tokens = [vocab[int(i)] for i in rng.integers(0, len(vocab), size=6)]
            body_tokens += [
                noise_vocab[int(i)] for i in rng.integers(0, len(noise_vocab), size=2)
            ]
            documents.append(
                Document(
                    doc_id=f"t{t:02d}d{d:03d}",
                    title=title,
                    description=" ".join(body_tokens),
                )
            )
            doc_topic.append(t)

    n_docs = len(documents)
    popularity = rng.uniform(0.0, POPULARITY_SPAN, size=n_docs)
    queries: list[tuple[str, int, int]] = []  # (text, topic, true doc index)
    seen_queries: set[str] = set()
    for t in range(cfg.topics):
        for q in range(cfg.queries_per_topic):
            vocab = query_vocab[t]
            text = " ".join(vocab[int(i)] for i in rng.integers(0, len(vocab), size=3))
            while text in seen_queries:
                text = " ".join(vocab[int(i)] for i in rng.integers(0, len(vocab), size=3))
            seen_queries.add(text)
            true_idx = t * cfg.docs_per_topic + (q % cfg.docs_per_topic)
            queries.append((text, t, true_idx))

    clicks: list[ClickRecord] = []
    per_query_counts: dict[str, dict[str, int]] = {}
    true_doc: dict[str, str] = {}
    affinities: dict[str, np.ndarray] = {}
    for text, topic, true_idx in queries:
        affinity = np.full(n_docs, AFFINITY_CROSS_TOPIC)
        for i, dt in enumerate(doc_topic):
            if dt == topic:
                affinity[i] = AFFINITY_SAME_TOPIC_BASE + popularity[i]
        affinity[true_idx] = AFFINITY_TRUE
        logits = affinity / cfg.click_temperature
        probs = np.exp(logits - logits.max())
        probs /= probs.sum()
        counts = rng.multinomial(CLICKS_PER_QUERY, probs)
        group: dict[str, int] = {}
        for i in np.nonzero(counts)[0]:
            group[documents[int(i)].doc_id] = int(counts[int(i)])
        per_query_counts[text] = group
        true_doc[text] = documents[true_idx].doc_id
        affinities[text] = affinity

    query_texts = [q[0] for q in queries]
    n_eval = int(round(EVAL_HOLDOUT_FRACTION * len(query_texts)))
    eval_positions = set(
        rng.choice(len(query_texts), size=n_eval, replace=False).tolist()
    )

    eval_queries: list[EvalQuery] = []
    for pos, text in enumerate(query_texts):
        group = per_query_counts[text]
        if not group:
            continue
        if pos in eval_positions:
            max_clicks = max(group.values())
            eval_queries.append(
                EvalQuery(
                    query=text,
                    relevant={doc_id: c / max_clicks for doc_id, c in group.items()},
                )
            )
        else:
            for doc_id, c in sorted(group.items()):
                clicks.append(ClickRecord(query=text, doc_id=doc_id, clicks=c))

    return SynthCorpus(
        documents=documents,
        clicks=clicks,
        eval_queries=eval_queries,
        true_doc=true_doc,
        affinities=affinities,
    )


# --- LLM-as-judge -----------------------------------------------------------

DEFAULT_JUDGE_TEMPLATE = (
    "You are grading answer quality. Rate how similar the candidate answer is "
    "to the gold answer for the given question, on a scale of 1 to 5, where 5 "
    "means fully equivalent and 1 means unrelated. Reply with the number first.\n"
    "\n"
    "Question: {question}\n"
    "Gold answer: {gold}\n"
    "Candidate answer: {candidate}\n"
    "Score: "
)

JUDGE_SAMPLES = 20

_LEADING_SCORE_RE = re.compile(r"^\s*([1-5])(?:\D|$)")


def judge_relevance(
    question: str,
    gold: str,
    candidate: str,
    client: LlmProvider,
    template: str = DEFAULT_JUDGE_TEMPLATE,
) -> float:
    """Score a candidate answer against the gold one on a 1-5 scale.

    Issues a single 20-sample completion at temperature 1 / top_p 1 and
    averages the parseable leading integer of each sample.
    """
    prompt = template.format(question=question, gold=gold, candidate=candidate)
    result = client.complete(
        CompletionRequest(prompt=prompt, temperature=1.0, top_p=1.0, n=JUDGE_SAMPLES)
    )
    scores = []
    for sample in result.samples:
        m = _LEADING_SCORE_RE.match(sample)
        if m:
            scores.append(int(m.group(1)))
    if not scores:
        raise JudgeError("no judge sample contained a leading 1-5 score")
    return sum(scores) / len(scores)
