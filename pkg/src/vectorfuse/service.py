"""HTTP service exposing search, evaluation, and benchmarking.

The app is built around one pair of index snapshots produced by the
ingest command. When the snapshots were built by the toy encoder, text
queries are encoded in-process at the index's dimensions; for corpora
ingested from precomputed vectors, text-only requests are rejected and
callers must supply explicit query vectors, so the service never scores
a corpus with a different encoder than it was built with.

Startup refuses to serve when the two snapshots disagree about the
projection seed or the caller pins a different seed than the snapshots
were built with; silently re-projecting queries with the wrong matrix
would return plausible-looking nonsense.

Responses carry a schema field ("1") so clients can detect format
changes.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from . import corpus as corpus_io
from .corpus import QueryRecord
from .evaluation import evaluate_run, read_qrels
from .fusion import ild_at_k
from .index import FusedIndex, HybridIndex
from .model import SparseVec, VectorError, as_dense
from .pipeline import METHODS, PipelineConfig, Retriever, toy_encode
from .projection import build_projection

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
QUERIES_FILE = "queries.jsonl"
QRELS_FILE = "qrels.txt"
SNIPPET_CHARS = 240

MethodName = Literal["sparse", "dense", "rrf", "rrf_mmr", "proj", "proj_mmr"]


@dataclass
class ServiceConfig:
    workdir: Path
    projection_seed: int | None = None
    static_dir: Path | None = None


class SparseVecBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    indices: list[int]
    values: list[float]


class SearchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    query: str | None = Field(default=None, max_length=2000)
    dense: list[float] | None = None
    sparse: SparseVecBody | None = None
    method: MethodName = "rrf"
    top_k: int = Field(default=10, ge=1, le=100)
    candidate_k: int = Field(default=50, ge=1, le=500)
    alpha_query: float = Field(default=0.95, ge=0.0, le=1.0)
    alpha_hyb: float | None = Field(default=None, ge=0.0, le=1.0)
    mmr_lambda: float = Field(default=0.7, ge=0.0, le=1.0)


class EvaluateQuery(BaseModel):
    model_config = ConfigDict(extra="forbid")

    query_id: str = Field(min_length=1)
    text: str = Field(min_length=1)


class EvaluateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: MethodName = "rrf"
    k: int = Field(default=10, ge=1, le=100)
    alpha_query: float = Field(default=0.95, ge=0.0, le=1.0)
    mmr_lambda: float = Field(default=0.7, ge=0.0, le=1.0)
    queries: list[EvaluateQuery] | None = None
    qrels: dict[str, dict[str, int]] | None = None


class BenchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    methods: list[MethodName] = Field(default=["rrf", "proj"], min_length=1)
    repeats: int = Field(default=1, ge=1, le=10)


def _load_retriever(config: ServiceConfig) -> tuple[Retriever, dict]:
    hybrid_path = config.workdir / corpus_io.HYBRID_SNAPSHOT
    fused_path = config.workdir / corpus_io.FUSED_SNAPSHOT
    for path in (hybrid_path, fused_path):
        if not path.exists():
            raise VectorError(f"missing index snapshot: {path}")
    hybrid = HybridIndex.load(hybrid_path)
    fused = FusedIndex.load(fused_path)
    h_seed = hybrid.metadata.get("projection_seed")
    f_seed = fused.metadata.get("projection_seed")
    if h_seed != f_seed:
        raise VectorError(
            f"snapshot projection seeds disagree: hybrid {h_seed}, fused {f_seed}"
        )
    if h_seed is None:
        raise VectorError("snapshots carry no projection seed; re-run ingest")
    if config.projection_seed is not None and config.projection_seed != h_seed:
        raise VectorError(
            f"configured projection seed {config.projection_seed} does not match "
            f"snapshot seed {h_seed}; refusing to start"
        )
    projection = build_projection(int(h_seed), hybrid.dense_dim, hybrid.vocab_dim)
    retriever = Retriever(hybrid, fused, projection)
    info = {
        "version": __version__,
        "documents": len(hybrid),
        "documents_fused": len(fused),
        "dense_dim": hybrid.dense_dim,
        "vocab_dim": hybrid.vocab_dim,
        "projection_seed": int(h_seed),
        "alpha_doc": hybrid.metadata.get("alpha_doc"),
        "encoder": hybrid.metadata.get("encoder", "precomputed"),
    }
    return retriever, info


def create_app(config: ServiceConfig) -> FastAPI:
    retriever, info = _load_retriever(config)
    app = FastAPI(title="vectorfuse", docs_url=None, redoc_url=None)
    job_lock = threading.Lock()
    toy_mode = info["encoder"] == "toy"

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        elapsed = (time.perf_counter() - started) * 1000.0
        logger.info(
            "%s %s -> %d (%.1f ms)",
            request.method,
            request.url.path,
            response.status_code,
            elapsed,
        )
        return response

    def _query_from_request(req: SearchRequest) -> tuple[QueryRecord, float]:
        """Build the QueryRecord, returning it with the encode time in ms."""
        if req.query is not None and req.query.strip():
            if not toy_mode:
                raise VectorError(
                    "this corpus was ingested from precomputed vectors; "
                    "text queries cannot be encoded consistently - send "
                    "explicit dense/sparse query vectors instead"
                )
            t0 = time.perf_counter()
            dense, sparse = toy_encode(
                req.query, retriever.hybrid.dense_dim, retriever.hybrid.vocab_dim
            )
            encode_ms = (time.perf_counter() - t0) * 1000.0
            return QueryRecord("web", req.query, dense, sparse), encode_ms
        if req.dense is None and req.sparse is None:
            raise VectorError("request needs query text or explicit vectors")
        dense = None
        if req.dense is not None:
            dense = as_dense(
                np.asarray(req.dense, dtype=np.float32), retriever.hybrid.dense_dim
            )
        sparse = None
        if req.sparse is not None:
            sparse = SparseVec(
                np.asarray(req.sparse.indices, dtype=np.int32),
                np.asarray(req.sparse.values, dtype=np.float32),
                retriever.hybrid.vocab_dim,
            )
        return QueryRecord("web", req.query or "", dense, sparse), 0.0

    @app.get("/health")
    def health() -> dict:
        return {"schema": SCHEMA_VERSION, "status": "ok", "methods": list(METHODS), **info}

    @app.post("/search")
    def search(req: SearchRequest) -> dict:
        try:
            query, encode_ms = _query_from_request(req)
            cfg = PipelineConfig(
                method=req.method,
                top_k=req.top_k,
                candidate_k=max(req.candidate_k, req.top_k),
                alpha_query=req.alpha_query,
                alpha_hyb=req.alpha_hyb,
                mmr_lambda=req.mmr_lambda,
            )
            ranked, timing = retriever.run_query(query, cfg)
            vectors = retriever.dense_vectors(ranked.doc_ids())
        except VectorError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        hits = []
        for hit in ranked.hits:
            title, abstract = retriever.hybrid.doc_meta(hit.doc_id)
            hits.append(
                {
                    "doc_id": hit.doc_id,
                    "title": title,
                    "abstract": abstract[:SNIPPET_CHARS],
                    "score": hit.score,
                    "rank": hit.rank,
                }
            )
        ild = (
            ild_at_k([vectors[d] for d in ranked.doc_ids()], k=10)
            if len(hits) >= 2
            else None
        )
        params = {
            "top_k": cfg.top_k,
            "candidate_k": cfg.candidate_k,
            "alpha_query": cfg.alpha_query,
            "alpha_hyb": cfg.alpha_hyb,
            "mmr_lambda": cfg.mmr_lambda,
            "rrf_k": cfg.rrf.k,
            "rrf_weights": list(cfg.rrf.weights),
        }
        timing = {"encode_ms": encode_ms, **timing}
        timing["total_ms"] += encode_ms
        logger.info(
            "search method=%s params=%s total_ms=%.1f", req.method, params, timing["total_ms"]
        )
        return {
            "schema": SCHEMA_VERSION,
            "query": req.query,
            "method": req.method,
            "params": params,
            "hits": hits,
            "timing": timing,
            "ild": ild,
        }

    def _stored_queries() -> list[QueryRecord]:
        queries_path = config.workdir / QUERIES_FILE
        if not queries_path.exists():
            raise HTTPException(
                status_code=400,
                detail=f"no stored query set at {queries_path}; ingest wrote none",
            )
        records = list(
            corpus_io.iter_queries(
                queries_path, retriever.hybrid.dense_dim, retriever.hybrid.vocab_dim
            )
        )
        for record in records:
            if record.text and (record.dense is None or record.sparse is None):
                if not toy_mode:
                    raise HTTPException(
                        status_code=400,
                        detail=f"stored query {record.query_id!r} carries no vectors "
                        "and this corpus was ingested from precomputed vectors",
                    )
                record.dense, record.sparse = toy_encode(
                    record.text, retriever.hybrid.dense_dim, retriever.hybrid.vocab_dim
                )
        return records

    def _encode_uploaded(queries: list[EvaluateQuery]) -> list[QueryRecord]:
        if not toy_mode:
            raise HTTPException(
                status_code=400,
                detail="uploaded text queries need the toy encoder; this corpus "
                "was ingested from precomputed vectors",
            )
        records = []
        for q in queries:
            dense, sparse = toy_encode(
                q.text, retriever.hybrid.dense_dim, retriever.hybrid.vocab_dim
            )
            records.append(QueryRecord(q.query_id, q.text, dense, sparse))
        return records

    @app.post("/evaluate")
    def evaluate(req: EvaluateRequest) -> dict:
        if req.queries is not None:
            queries = _encode_uploaded(req.queries)
        else:
            queries = _stored_queries()
        if req.qrels is not None:
            qrels = req.qrels
        else:
            qrels_path = config.workdir / QRELS_FILE
            if not qrels_path.exists():
                raise HTTPException(
                    status_code=400, detail=f"no stored judgments at {qrels_path}"
                )
            qrels = read_qrels(qrels_path)
        with job_lock:
            try:
                cfg = PipelineConfig(
                    method=req.method,
                    top_k=req.k,
                    candidate_k=max(50, req.k),
                    alpha_query=req.alpha_query,
                    mmr_lambda=req.mmr_lambda,
                )
                run, latency, errors = retriever.run_batch(queries, cfg)
                doc_vectors = {}
                for ranked in run.values():
                    doc_vectors.update(retriever.dense_vectors(ranked.doc_ids()))
                report = evaluate_run(run, qrels, k=req.k, doc_vectors=doc_vectors)
            except VectorError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        return {
            "schema": SCHEMA_VERSION,
            "method": req.method,
            "report": report.to_dict(),
            "latency": latency.to_dict(),
            "errors": errors,
        }

    @app.post("/bench")
    def bench(req: BenchRequest) -> dict:
        queries = _stored_queries()
        results: dict[str, dict] = {}
        with job_lock:
            for method in req.methods:
                cfg = PipelineConfig(method=method)
                before = retriever.hybrid.query_count + retriever.fused.query_count
                samples: list[float] = []
                for _ in range(req.repeats):
                    try:
                        _, latency, _ = retriever.run_batch(queries, cfg)
                    except VectorError as exc:
                        raise HTTPException(status_code=400, detail=str(exc))
                    samples.append(latency.avg_ms)
                after = retriever.hybrid.query_count + retriever.fused.query_count
                results[method] = {
                    "avg_ms": sum(samples) / len(samples),
                    "p95_ms": latency.p95_ms,
                    "queries": len(queries) * req.repeats,
                    "index_queries": after - before,
                }
        return {"schema": SCHEMA_VERSION, "results": results}

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        app.mount(
            "/ui", StaticFiles(directory=str(config.static_dir), html=True), name="ui"
        )

    return app
