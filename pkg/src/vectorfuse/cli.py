"""Command line front end.

Subcommands: ingest, search, eval, bench, sweep, serve. Usage errors
exit with status 2 (argparse's convention); runtime failures print one
line to stderr and exit with status 1.

VECTORFUSE_WORKDIR, VECTORFUSE_HOST, and VECTORFUSE_PORT provide
defaults for the corresponding flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .evaluation import evaluate_run, read_qrels, write_run
from .model import VectorError
from .pipeline import METHODS, PipelineConfig, Retriever, encode_query
from .projection import (
    DEFAULT_PROJECTION_SEED,
    AlphaMix,
    build_projection,
    fuse_document,
)

DEFAULT_WORKDIR = os.environ.get("VECTORFUSE_WORKDIR", "vectorfuse-data")


def _add_workdir(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workdir",
        default=DEFAULT_WORKDIR,
        help="directory holding index snapshots and ingest state",
    )


def _add_method(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=METHODS, default="rrf")
    parser.add_argument("--top-k", type=int, default=10)
    parser.add_argument("--alpha-query", type=float, default=AlphaMix.DEFAULT_QUERY)
    parser.add_argument("--mmr-lambda", type=float, default=0.7)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vectorfuse",
        description="hybrid sparse and dense retrieval with one-pass fusion",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="build index snapshots from a corpus")
    _add_workdir(p_ingest)
    p_ingest.add_argument("corpus", nargs="?", help="corpus JSONL file")
    p_ingest.add_argument(
        "--demo",
        action="store_true",
        help="generate the bundled demo collection into the workdir first",
    )
    p_ingest.add_argument("--batch-size", type=int, default=100)
    p_ingest.add_argument("--resume", action="store_true")
    p_ingest.add_argument("--seed", type=int, default=DEFAULT_PROJECTION_SEED)
    p_ingest.add_argument("--alpha-doc", type=float, default=AlphaMix.DEFAULT_DOC)
    p_ingest.add_argument("--dense-dim", type=int, default=768)
    p_ingest.add_argument("--vocab-dim", type=int, default=30522)

    p_search = sub.add_parser("search", help="run one query against the snapshots")
    _add_workdir(p_search)
    p_search.add_argument("query", help="query text")
    _add_method(p_search)
    p_search.add_argument("--json", action="store_true", help="emit JSON")

    p_eval = sub.add_parser("eval", help="score a method or a run file against qrels")
    _add_workdir(p_eval)
    p_eval.add_argument("--qrels", required=True)
    p_eval.add_argument("--queries", help="query JSONL (defaults to workdir queries)")
    p_eval.add_argument("--run", help="score this TREC run file instead of retrieving")
    _add_method(p_eval)
    p_eval.add_argument("--k", type=int, default=10)
    p_eval.add_argument("--run-out", help="write the produced run in TREC format")
    p_eval.add_argument("--report-out", help="write the metric report as JSON")

    p_bench = sub.add_parser("bench", help="compare method latency on synthetic data")
    p_bench.add_argument("--docs", type=int, default=50000)
    p_bench.add_argument("--queries", type=int, default=50)
    p_bench.add_argument("--dense-dim", type=int, default=768)
    p_bench.add_argument("--vocab-dim", type=int, default=30522)
    p_bench.add_argument("--seed", type=int, default=3)
    p_bench.add_argument(
        "--methods", default="rrf,proj", help="comma-separated method names"
    )
    p_bench.add_argument("--json", action="store_true", help="emit JSON")

    p_sweep = sub.add_parser("sweep", help="sweep the query-side mix weight")
    _add_workdir(p_sweep)
    p_sweep.add_argument("--qrels", required=True)
    p_sweep.add_argument("--queries", help="query JSONL (defaults to workdir queries)")
    p_sweep.add_argument(
        "--alphas", default="0.5,0.8,0.95,1.0", help="comma-separated weights"
    )
    p_sweep.add_argument("--k", type=int, default=10)
    p_sweep.add_argument("--json", action="store_true", help="emit JSON")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    _add_workdir(p_serve)
    p_serve.add_argument("--host", default=os.environ.get("VECTORFUSE_HOST", "127.0.0.1"))
    p_serve.add_argument(
        "--port", type=int, default=int(os.environ.get("VECTORFUSE_PORT", "8765"))
    )
    p_serve.add_argument("--static-dir", help="serve a built UI from this directory")
    p_serve.add_argument("--seed", type=int, help="require this projection seed")

    return parser


def _load_retriever(workdir: str) -> tuple[Retriever, dict]:
    from .service import ServiceConfig, _load_retriever

    return _load_retriever(ServiceConfig(workdir=Path(workdir)))


def _load_queries(args, retriever: Retriever, info: dict):
    """Read the query set, toy-encoding text-only records when possible."""
    from . import corpus as corpus_io
    from .pipeline import toy_encode

    path = args.queries or str(Path(args.workdir) / "queries.jsonl")
    if not Path(path).exists():
        raise VectorError(f"query file not found: {path}")
    queries = list(
        corpus_io.iter_queries(
            path, retriever.hybrid.dense_dim, retriever.hybrid.vocab_dim
        )
    )
    missing = [q for q in queries if q.text and (q.dense is None or q.sparse is None)]
    if missing and info.get("encoder") != "toy":
        ids = ", ".join(q.query_id for q in missing[:5])
        raise VectorError(
            f"{len(missing)} queries carry no vectors (first: {ids}) and this "
            "corpus was ingested from precomputed vectors; supply dense/sparse "
            "fields in the query file"
        )
    for q in missing:
        dense, sparse = toy_encode(
            q.text, retriever.hybrid.dense_dim, retriever.hybrid.vocab_dim
        )
        q.dense, q.sparse = dense, sparse
    return queries


def cmd_ingest(args) -> int:
    from . import corpus as corpus_io
    from .datagen import demo_collection

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    corpus_path = args.corpus
    if args.demo:
        records, queries, qrels = demo_collection(
            dense_dim=args.dense_dim, vocab_dim=args.vocab_dim
        )
        corpus_path = workdir / "corpus.jsonl"
        corpus_io.write_corpus(records, corpus_path)
        corpus_io.write_queries(queries, workdir / "queries.jsonl")
        with open(workdir / "qrels.txt", "w") as fh:
            for query_id in sorted(qrels):
                for doc_id, grade in sorted(qrels[query_id].items()):
                    fh.write(f"{query_id} 0 {doc_id} {grade}\n")
        print(f"demo collection written under {workdir}")
    if corpus_path is None:
        print("error: provide a corpus file or --demo", file=sys.stderr)
        return 2
    projection = build_projection(args.seed, args.dense_dim, args.vocab_dim)
    summary = corpus_io.ingest_corpus(
        corpus_path,
        workdir,
        projection,
        alpha_doc=AlphaMix.for_document(args.alpha_doc),
        batch_size=args.batch_size,
        resume=args.resume,
        encoder="toy" if args.demo else "precomputed",
    )
    if summary.resumed_from_batch is not None:
        print(f"resumed from batch {summary.resumed_from_batch}")
    print(
        f"ingested {summary.ingested} documents in {summary.batches} batches "
        f"({len(summary.skipped)} skipped)"
    )
    for doc_id, reason in sorted(summary.skipped.items()):
        print(f"  skipped {doc_id}: {reason}")
    print(f"hybrid digest {summary.hybrid_digest[:16]}")
    print(f"fused digest  {summary.fused_digest[:16]}")
    return 0


def cmd_search(args) -> int:
    retriever, info = _load_retriever(args.workdir)
    if info.get("encoder") != "toy":
        raise VectorError(
            "this corpus was ingested from precomputed vectors; text search "
            "from the command line needs a toy-encoded corpus (ingest --demo)"
        )
    query = encode_query(
        "cli", args.query, retriever.hybrid.dense_dim, retriever.hybrid.vocab_dim
    )
    config = PipelineConfig(
        method=args.method,
        top_k=args.top_k,
        candidate_k=max(50, args.top_k),
        alpha_query=args.alpha_query,
        mmr_lambda=args.mmr_lambda,
    )
    ranked, timing = retriever.run_query(query, config)
    if args.json:
        print(
            json.dumps(
                {
                    "method": args.method,
                    "hits": [
                        {"doc_id": h.doc_id, "score": h.score, "rank": h.rank}
                        for h in ranked.hits
                    ],
                    "timing": timing,
                },
                indent=2,
            )
        )
        return 0
    print(f"method {args.method}, {timing['total_ms']:.1f} ms")
    for hit in ranked.hits:
        title, _ = retriever.hybrid.doc_meta(hit.doc_id)
        print(f"{hit.rank:>3}. {hit.score:>10.6f}  {hit.doc_id}  {title}")
    return 0


def cmd_eval(args) -> int:
    from .evaluation import read_run

    qrels = read_qrels(args.qrels)
    if args.run:
        run = read_run(args.run)
        report = evaluate_run(run, qrels, k=args.k)
    else:
        retriever, info = _load_retriever(args.workdir)
        queries = _load_queries(args, retriever, info)
        config = PipelineConfig(
            method=args.method,
            top_k=args.top_k,
            candidate_k=max(50, args.top_k),
            alpha_query=args.alpha_query,
            mmr_lambda=args.mmr_lambda,
        )
        run, latency, errors = retriever.run_batch(queries, config)
        for query_id, message in sorted(errors.items()):
            print(f"query {query_id} failed: {message}", file=sys.stderr)
        doc_vectors = {}
        for ranked in run.values():
            doc_vectors.update(retriever.dense_vectors(ranked.doc_ids()))
        report = evaluate_run(run, qrels, k=args.k, doc_vectors=doc_vectors)
        if args.run_out:
            write_run(run, args.run_out, tag=args.method)
        print(
            f"latency avg {latency.avg_ms:.1f} ms, p95 {latency.p95_ms:.1f} ms "
            f"over {latency.count} queries"
        )
    if args.report_out:
        report.to_json(args.report_out)
    print(report.to_text())
    return 0


def cmd_bench(args) -> int:
    from .datagen import random_queries, random_records
    from .index import FusedIndex, HybridIndex
    from .projection import fuse_documents

    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            print(f"error: unknown method {m!r}", file=sys.stderr)
            return 2

    print(
        f"building {args.docs} documents (dense {args.dense_dim}, "
        f"vocab {args.vocab_dim})",
        file=sys.stderr,
    )
    records = random_records(args.docs, args.dense_dim, args.vocab_dim, args.seed)
    queries = random_queries(args.queries, args.dense_dim, args.vocab_dim, args.seed + 1)
    projection = build_projection(DEFAULT_PROJECTION_SEED, args.dense_dim, args.vocab_dim)
    fuse_documents(records, projection, AlphaMix.for_document())
    hybrid = HybridIndex(args.dense_dim, args.vocab_dim)
    fused = FusedIndex(args.dense_dim)
    for start in range(0, len(records), 5000):
        chunk = records[start : start + 5000]
        hybrid.upsert(chunk)
        fused.upsert(chunk)
    retriever = Retriever(hybrid, fused, projection)

    results = {}
    for method in methods:
        config = PipelineConfig(method=method)
        before = hybrid.query_count + fused.query_count
        started = time.perf_counter()
        _, latency, errors = retriever.run_batch(queries, config)
        wall = time.perf_counter() - started
        after = hybrid.query_count + fused.query_count
        results[method] = {
            "avg_ms": latency.avg_ms,
            "p95_ms": latency.p95_ms,
            "index_queries": after - before,
            "queries": latency.count,
            "wall_s": wall,
            "errors": len(errors),
        }
    if args.json:
        print(json.dumps(results, indent=2))
        return 0
    print(f"{'method':<10} {'avg ms':>10} {'p95 ms':>10} {'index queries':>14}")
    for method, row in results.items():
        print(
            f"{method:<10} {row['avg_ms']:>10.2f} {row['p95_ms']:>10.2f} "
            f"{row['index_queries']:>14}"
        )
    return 0


def cmd_sweep(args) -> int:
    retriever, info = _load_retriever(args.workdir)
    queries = _load_queries(args, retriever, info)
    qrels = read_qrels(args.qrels)
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    except ValueError:
        print(f"error: bad --alphas value {args.alphas!r}", file=sys.stderr)
        return 2
    if not alphas:
        print("error: --alphas is empty", file=sys.stderr)
        return 2
    results = retriever.alpha_sweep(queries, alphas, qrels, k=args.k)
    if args.json:
        print(
            json.dumps(
                [
                    {"alpha_query": alpha, "means": report.means}
                    for alpha, report in results
                ],
                indent=2,
            )
        )
        return 0
    metric = f"ndcg@{args.k}"
    print(f"{'alpha':>6} {metric:>10} {'map':>8} {'mrr':>8}")
    for alpha, report in results:
        print(
            f"{alpha:>6.2f} {report.means.get(metric, 0.0):>10.4f} "
            f"{report.means.get(f'map@{args.k}', 0.0):>8.4f} "
            f"{report.means.get(f'mrr@{args.k}', 0.0):>8.4f}"
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        workdir=Path(args.workdir),
        projection_seed=args.seed,
        static_dir=Path(args.static_dir) if args.static_dir else None,
    )
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "search": cmd_search,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except VectorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
