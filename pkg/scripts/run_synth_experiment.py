#!/usr/bin/env python3
"""Controlled retrieval experiment on the synthetic click corpus.

Trains the projection on click-derived pairs and reports mean nDCG@k for
the untrained (identity + noise) and trained towers on the held-out query
split, mirroring the before/after comparison the production system runs on
real behavioral data.

Usage:
    python scripts/run_synth_experiment.py [--seed 42] [--epochs 20] [--k 10]
"""

import argparse
import time

from ragforge import vector_index
from ragforge.click_ingest import compute_relevance
from ragforge.embedder import FeatureConfig, Projection, TrainConfig, train
from ragforge.evaluation import SynthConfig, evaluate_retriever, synth_clicks


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--topics", type=int, default=10)
    parser.add_argument("--docs-per-topic", type=int, default=30)
    parser.add_argument("--queries-per-topic", type=int, default=40)
    parser.add_argument("--dim", type=int, default=256)
    args = parser.parse_args()

    synth_cfg = SynthConfig(
        topics=args.topics,
        docs_per_topic=args.docs_per_topic,
        queries_per_topic=args.queries_per_topic,
        rng_seed=args.seed,
    )
    corpus = synth_clicks(synth_cfg)
    docs = {d.doc_id: d for d in corpus.documents}
    pairs = compute_relevance(corpus.clicks, docs).pairs
    print(
        f"corpus: {len(corpus.documents)} docs, {len(pairs)} training pairs, "
        f"{len(corpus.eval_queries)} held-out queries"
    )

    fcfg = FeatureConfig(dim=args.dim, hash_seed=args.seed)
    records = [
        {"item_id": d.doc_id, "kind": "helpx_doc", "title": d.title, "description": d.description}
        for d in corpus.documents
    ]

    untrained = Projection.initial(fcfg.dim, rng_seed=args.seed)
    index0 = vector_index.build(records, untrained, fcfg)
    before = evaluate_retriever(index0, untrained, fcfg, corpus.eval_queries, k=args.k)

    started = time.monotonic()
    result = train(pairs, TrainConfig(epochs=args.epochs, rng_seed=args.seed), fcfg)
    train_s = time.monotonic() - started
    index1 = vector_index.build(records, result.projection, fcfg)
    after = evaluate_retriever(index1, result.projection, fcfg, corpus.eval_queries, k=args.k)

    print(f"training: {args.epochs} epochs in {train_s:.1f}s, "
          f"loss {result.epoch_losses[0]:.4f} -> {result.epoch_losses[-1]:.4f}")
    print()
    print(f"{'model':<24} nDCG@{args.k}")
    print(f"{'untrained (identity)':<24} {before.mean_ndcg:.4f}")
    print(f"{'trained projection':<24} {after.mean_ndcg:.4f}")
    print(f"{'absolute gain':<24} {after.mean_ndcg - before.mean_ndcg:+.4f}")


if __name__ == "__main__":
    main()
