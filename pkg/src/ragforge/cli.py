"""Single entry point exposing every pipeline stage as a subcommand.

Exit codes: 0 on success, 1 on a domain error, 2 on a usage or config
error.  All stages read the same TOML config; --seed overrides every
seeded stage for one-flag reproducibility.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__, embedder, vector_index
from .click_ingest import TrainingPair, compute_relevance, parse_click_log
from .config import Config, load_config
from .data import document_to_dict, load_documents, read_jsonl, write_jsonl
from .embedder import Projection, train
from .errors import ConfigError, RagforgeError
from .evaluation import EvalQuery, evaluate_retriever, judge_relevance, synth_clicks
from .finetune_dataset import QAPair, build_dataset, filter_short_answers, render_training_sample
from .llm_client import BoundedProvider, HttpProvider, ScriptedProvider
from .product_intent import ProductCatalog
from .qa_generator import Exemplar, generate_for_corpus
from .rag_pipeline import RagEngine
from .sanitizer import DictionaryNerProvider, sanitize_records

log = logging.getLogger("ragforge")


def build_llm_client(cfg: Config):
    llm = cfg.llm
    if llm.provider == "http":
        if not llm.endpoint:
            raise ConfigError("llm.endpoint is required for the http provider")
        provider = HttpProvider(endpoint=llm.endpoint, model=llm.model, timeout=llm.timeout)
    else:
        if llm.fixture_dir:
            provider = ScriptedProvider(fixture_dir=llm.fixture_dir)
        elif llm.script:
            provider = ScriptedProvider(script=list(llm.script))
        else:
            raise ConfigError("llm.fixture_dir or llm.script is required for the scripted provider")
    return BoundedProvider(provider, max_in_flight=llm.max_in_flight)


def _apply_seed(cfg: Config, seed: int | None) -> Config:
    if seed is None:
        return cfg
    return dataclasses.replace(
        cfg,
        training=dataclasses.replace(cfg.training, rng_seed=seed),
        finetune=dataclasses.replace(cfg.finetune, rng_seed=seed),
        synth=dataclasses.replace(cfg.synth, rng_seed=seed),
    )


def _load_engine(cfg: Config, index_path=None, projection_path=None) -> RagEngine:
    index = vector_index.load(index_path or cfg.paths.index)
    proj = Projection.load(projection_path or cfg.paths.projection)
    catalog = ProductCatalog.load(cfg.paths.catalog) if cfg.paths.catalog else None
    return RagEngine(
        index=index,
        projection=proj,
        fcfg=cfg.features,
        catalog=catalog,
        client=build_llm_client(cfg),
        dedup_cfg=cfg.dedup,
        retrieval=cfg.retrieval,
    )


# --- subcommands -------------------------------------------------------------


def cmd_synth(args, cfg: Config) -> int:
    corpus = synth_clicks(cfg.synth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "docs.jsonl", (document_to_dict(d) for d in corpus.documents))
    write_jsonl(
        out / "sources.jsonl",
        (
            {
                "item_id": d.doc_id,
                "kind": "helpx_doc",
                "title": d.title,
                "description": d.description,
                "product_tags": sorted(d.product_tags),
            }
            for d in corpus.documents
        ),
    )
    write_jsonl(
        out / "clicks.jsonl",
        ({"query": r.query, "doc_id": r.doc_id, "clicks": r.clicks} for r in corpus.clicks),
    )
    write_jsonl(
        out / "eval.jsonl",
        ({"query": q.query, "relevant": dict(q.relevant)} for q in corpus.eval_queries),
    )
    log.info(
        "synth: %d docs, %d click records, %d eval queries -> %s",
        len(corpus.documents),
        len(corpus.clicks),
        len(corpus.eval_queries),
        out,
    )
    return 0


def cmd_ingest_clicks(args, cfg: Config) -> int:
    docs = {d.doc_id: d for d in load_documents(args.docs)}
    with open(args.clicks, encoding="utf-8") as fh:
        parsed = parse_click_log(fh)
    result = compute_relevance(parsed.records, docs)
    write_jsonl(args.out, (p.to_dict() for p in result.pairs))
    log.info(
        "ingest-clicks: %d pairs (%d lines skipped, %d unresolvable docs)",
        len(result.pairs),
        parsed.skipped,
        result.skipped_docs,
    )
    return 0


def cmd_train_retriever(args, cfg: Config) -> int:
    pairs = [TrainingPair.from_dict(row) for row in read_jsonl(args.pairs)]
    result = train(pairs, cfg.training, cfg.features)
    result.projection.save(args.out)
    first = result.epoch_losses[0] if result.epoch_losses else float("nan")
    last = result.epoch_losses[-1] if result.epoch_losses else float("nan")
    log.info(
        "train-retriever: %d pairs, %d epochs, loss %.4f -> %.4f, projection -> %s",
        len(pairs),
        cfg.training.epochs,
        first,
        last,
        args.out,
    )
    return 0


def cmd_build_index(args, cfg: Config) -> int:
    proj = Projection.load(args.projection)
    index = vector_index.build(read_jsonl(args.sources), proj, cfg.features)
    vector_index.save(index, args.out)
    log.info("build-index: %d items (dim %d) -> %s", len(index), index.dim, args.out)
    return 0


def cmd_sanitize(args, cfg: Config) -> int:
    fields = [f.strip() for f in args.fields.split(",") if f.strip()]
    if not fields:
        raise ConfigError("--fields must name at least one field")
    names_path = Path(cfg.paths.fixtures) / "person_names.txt"
    names = (
        [n.strip() for n in names_path.read_text(encoding="utf-8").splitlines() if n.strip()]
        if names_path.exists()
        else []
    )
    provider = DictionaryNerProvider(names)
    records = list(read_jsonl(getattr(args, "in")))
    cleaned, report = sanitize_records(records, fields, provider)
    write_jsonl(args.out, cleaned)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
    log.info("sanitize: %d records, counts %s", report.processed, report.to_dict()["counts"])
    return 0


def cmd_generate_qa(args, cfg: Config) -> int:
    docs = load_documents(args.docs)
    exemplars = []
    if args.exemplars:
        exemplars = [
            Exemplar(
                document=row["document"],
                question=row["question"],
                answer=row["answer"],
            )
            for row in read_jsonl(args.exemplars)
        ]
    client = build_llm_client(cfg)
    report = generate_for_corpus(
        docs, client, args.out, exemplars=exemplars, max_per_doc=args.max_per_doc
    )
    log.info(
        "generate-qa: ok=%d failed=%d skipped=%d pairs=%d",
        report.ok,
        report.failed,
        report.skipped,
        report.pairs_written,
    )
    return 0


def cmd_build_finetune_set(args, cfg: Config) -> int:
    pairs = [
        QAPair(
            question=row["question"],
            answer=row["answer"],
            source_doc_id=row["source_doc_id"],
        )
        for row in read_jsonl(args.qa)
    ]
    kept, dropped = filter_short_answers(pairs, cfg.finetune)
    index = vector_index.load(args.index)
    records, report = build_dataset(kept, index, cfg.finetune)
    write_jsonl(args.out, (r.to_dict() for r in records))
    if args.rendered:
        with open(args.rendered, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(render_training_sample(rec, seed=cfg.finetune.rng_seed))
                fh.write("\n\n---\n\n")
    log.info(
        "build-finetune-set: %d records (%d answerable, %d unanswerable), "
        "%d short answers dropped, %d skipped",
        report.total,
        report.answerable,
        report.unanswerable,
        dropped,
        len(report.skipped),
    )
    return 0


def cmd_eval_ndcg(args, cfg: Config) -> int:
    index = vector_index.load(args.index)
    proj = Projection.load(args.projection)
    eval_set = [
        EvalQuery(query=row["query"], relevant={k: float(v) for k, v in row["relevant"].items()})
        for row in read_jsonl(args.eval)
    ]
    report = evaluate_retriever(index, proj, cfg.features, eval_set, k=args.k)
    print(report.table())
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
    return 0


def cmd_judge(args, cfg: Config) -> int:
    client = build_llm_client(cfg)
    gold_rows = list(read_jsonl(args.gold))
    cand_rows = list(read_jsonl(args.candidates))
    if len(gold_rows) != len(cand_rows):
        raise RagforgeError(
            f"gold has {len(gold_rows)} rows but candidates has {len(cand_rows)}"
        )
    scores = []
    for gold, cand in zip(gold_rows, cand_rows):
        score = judge_relevance(gold["question"], gold["answer"], cand["answer"], client)
        scores.append(score)
        print(f"{score:.2f}  {gold['question']}")
    mean = sum(scores) / len(scores) if scores else 0.0
    print(f"mean relevance: {mean:.3f} over {len(scores)} rows")
    return 0


def cmd_serve(args, cfg: Config) -> int:
    import uvicorn

    from .service import create_app

    engine = _load_engine(cfg)
    app = create_app(engine, ui_origin=cfg.service.ui_origin)
    port = args.port or cfg.service.port
    log.info("serving on port %d (index size %d)", port, len(engine.index))
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")
    return 0


def cmd_ask(args, cfg: Config) -> int:
    engine = _load_engine(cfg)
    bundle = engine.answer(args.query)
    if args.trace:
        print(json.dumps(bundle.to_dict(), indent=2, sort_keys=True))
    else:
        print(bundle.answer)
        if bundle.used_items:
            print()
            for ri in bundle.used_items:
                print(f"  [{ri.rank}] {ri.item.item_id} ({ri.item.kind}) score={ri.score:.3f}")
    return 0


# --- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ragforge",
        description="Click-trained retrieval and grounded question answering.",
    )
    parser.add_argument("--version", action="version", version=f"ragforge {__version__}")
    parser.add_argument("--config", default=None, help="path to the TOML config file")
    parser.add_argument("--seed", type=int, default=None, help="override every stage seed")
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    parser.add_argument("--trace", action="store_true", help="verbose tracing where supported")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic click corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest-clicks", help="click log -> graded training pairs")
    p.add_argument("--clicks", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest_clicks)

    p = sub.add_parser("train-retriever", help="train the shared projection")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_retriever)

    p = sub.add_parser("build-index", help="embed sources into a search index")
    p.add_argument("--sources", required=True)
    p.add_argument("--projection", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("sanitize", help="scrub PII from JSONL records")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fields", required=True, help="comma-separated field names")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_sanitize)

    p = sub.add_parser("generate-qa", help="generate QA pairs from documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--exemplars", default=None)
    p.add_argument("--max-per-doc", type=int, default=8)
    p.set_defaults(func=cmd_generate_qa)

    p = sub.add_parser("build-finetune-set", help="compile finetuning records")
    p.add_argument("--qa", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rendered", default=None)
    p.set_defaults(func=cmd_build_finetune_set)

    p = sub.add_parser("eval-ndcg", help="nDCG over an eval split")
    p.add_argument("--index", required=True)
    p.add_argument("--projection", required=True)
    p.add_argument("--eval", required=True)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_eval_ndcg)

    p = sub.add_parser("judge", help="LLM-judge candidate answers against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--candidates", required=True)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("serve", help="run the HTTP answering service")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ask", help="answer one query from the command line")
    p.add_argument("query")
    p.set_defaults(func=cmd_ask)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _apply_seed(load_config(args.config), args.seed)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RagforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
