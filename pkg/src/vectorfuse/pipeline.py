"""Query-side orchestration: the six retrieval methods behind one call.

Methods
-------
sparse    inverted-index scoring only (hybrid index, mix weight 0)
dense     dense dot-product scoring only (hybrid index, mix weight 1)
rrf       dense and sparse candidate lists fused by weighted RRF
rrf_mmr   rrf candidates re-ranked for diversity with MMR
proj      one dot-product query with a fused query vector over the
          fused index (sparse signal carried by random projection)
proj_mmr  proj candidates re-ranked with MMR, using the fused query
          vector as the relevance reference

The two rrf variants issue two index queries per search; the two proj
variants issue one. That difference is observable through the index
query counters and is the point of the single-pass design.

At mmr_lambda = 1 the MMR objective carries no diversity term, so the
pipeline treats it as diversification switched off and returns the
undiversified method's own ordering (rrf_mmr collapses to rrf, proj_mmr
to proj). Calling the reranker anyway would re-sort the pool by cosine
to the query reference, which is a different relevance signal than the
pool's own scores; the collapse keeps the user-facing boundary exact.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from functools import lru_cache
from hashlib import blake2b
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import QueryRecord
from .evaluation import LatencyStats, MetricReport, Qrels, evaluate_run, latency_stats
from .fusion import MmrConfig, RrfConfig, mmr_rerank, rrf_fuse
from .index import AlphaHyb, FusedIndex, HybridIndex
from .model import (
    DENSE_DIM,
    VOCAB_DIM,
    DenseVec,
    RankedList,
    SparseVec,
    VectorError,
    l2_normalize,
)
from .projection import AlphaMix, ProjectionMatrix, build_projection, combine, project

logger = logging.getLogger(__name__)

METHODS = ("sparse", "dense", "rrf", "rrf_mmr", "proj", "proj_mmr")

TOY_PROJECTION_SEED = 97


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved parameters for one search invocation."""

    method: str = "rrf"
    top_k: int = 10
    candidate_k: int = 50
    alpha_query: float = AlphaMix.DEFAULT_QUERY
    mmr_lambda: float = 0.7
    rrf: RrfConfig = RrfConfig()
    alpha_hyb: float | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise VectorError(
                f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}"
            )
        if self.top_k < 1:
            raise VectorError(f"top_k must be >= 1, got {self.top_k}")
        if self.candidate_k < self.top_k:
            raise VectorError(
                f"candidate_k {self.candidate_k} must be >= top_k {self.top_k}"
            )
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise VectorError(f"mmr_lambda must lie in [0, 1], got {self.mmr_lambda}")
        if not 0.0 <= self.alpha_query <= 1.0:
            raise VectorError(f"alpha_query must lie in [0, 1], got {self.alpha_query}")
        if self.alpha_hyb is not None:
            if self.method not in ("sparse", "dense"):
                raise VectorError("alpha_hyb override applies to sparse/dense only")
            if not 0.0 <= self.alpha_hyb <= 1.0:
                raise VectorError(
                    f"alpha_hyb must lie in [0, 1], got {self.alpha_hyb}"
                )

    def mmr_config(self) -> MmrConfig:
        return MmrConfig(
            lambda_param=self.mmr_lambda,
            pool_size=self.candidate_k,
            output_size=self.top_k,
        )


class Retriever:
    """Runs any configured method against one pair of loaded indices."""

    def __init__(
        self,
        hybrid: HybridIndex,
        fused: FusedIndex,
        projection: ProjectionMatrix,
    ):
        if hybrid.dense_dim != fused.dense_dim:
            raise VectorError(
                f"index dims differ: hybrid {hybrid.dense_dim}, fused {fused.dense_dim}"
            )
        if projection.rows != hybrid.dense_dim or projection.cols != hybrid.vocab_dim:
            raise VectorError(
                "projection shape "
                f"{projection.rows}x{projection.cols} does not match indices "
                f"{hybrid.dense_dim}x{hybrid.vocab_dim}"
            )
        self.hybrid = hybrid
        self.fused = fused
        self.projection = projection

    def fused_query_vector(self, query: QueryRecord, alpha_query: float) -> DenseVec:
        """Combine the query's dense vector with its projected sparse one."""
        alpha = AlphaMix.for_query(alpha_query)
        projected = project(self.projection, query.sparse)
        return combine(query.dense, projected, alpha)

    def run_query(
        self, query: QueryRecord, config: PipelineConfig
    ) -> tuple[RankedList, dict[str, float]]:
        """Execute one search; returns the ranking and a timing breakdown.

        The timing dict reports retrieve_ms (index time), fuse_ms
        (query-vector construction, RRF, and MMR time), total_ms, and
        index_queries (how many index lookups the method needed).
        """
        started = time.perf_counter()
        method = config.method
        self._require_vectors(query, method, config)
        diversify = method in ("rrf_mmr", "proj_mmr") and config.mmr_lambda < 1.0
        fuse_ms = 0.0
        index_queries = 0

        if method == "sparse":
            alpha = AlphaHyb(0.0 if config.alpha_hyb is None else config.alpha_hyb)
            t0 = time.perf_counter()
            ranked = self.hybrid.query(query.dense, query.sparse, alpha, config.top_k)
            retrieve_ms = (time.perf_counter() - t0) * 1000.0
            index_queries = 1
        elif method == "dense":
            alpha = AlphaHyb(1.0 if config.alpha_hyb is None else config.alpha_hyb)
            t0 = time.perf_counter()
            ranked = self.hybrid.query(query.dense, query.sparse, alpha, config.top_k)
            retrieve_ms = (time.perf_counter() - t0) * 1000.0
            index_queries = 1
        elif method in ("rrf", "rrf_mmr"):
            t0 = time.perf_counter()
            dense_list = self.hybrid.query(
                query.dense, None, AlphaHyb(1.0), config.candidate_k
            )
            sparse_list = self.hybrid.query(
                None, query.sparse, AlphaHyb(0.0), config.candidate_k
            )
            retrieve_ms = (time.perf_counter() - t0) * 1000.0
            index_queries = 2
            t1 = time.perf_counter()
            pool_k = config.candidate_k if method == "rrf_mmr" else config.top_k
            ranked = rrf_fuse([dense_list, sparse_list], config.rrf, top_k=pool_k)
            if diversify:
                ranked = self._diversify(ranked, query.dense, config, self.hybrid)
            elif method == "rrf_mmr":
                ranked = RankedList(query_id=ranked.query_id, hits=ranked.hits[: config.top_k])
            fuse_ms = (time.perf_counter() - t1) * 1000.0
        else:
            t1 = time.perf_counter()
            q_vec = self.fused_query_vector(query, config.alpha_query)
            fuse_ms = (time.perf_counter() - t1) * 1000.0
            t0 = time.perf_counter()
            pool_k = config.candidate_k if method == "proj_mmr" else config.top_k
            ranked = self.fused.query(q_vec, pool_k)
            retrieve_ms = (time.perf_counter() - t0) * 1000.0
            index_queries = 1
            if diversify:
                t2 = time.perf_counter()
                ranked = self._diversify(ranked, q_vec, config, self.fused)
                fuse_ms += (time.perf_counter() - t2) * 1000.0
            elif method == "proj_mmr":
                ranked = RankedList(query_id=ranked.query_id, hits=ranked.hits[: config.top_k])

        ranked = RankedList(query_id=query.query_id, hits=ranked.hits)
        total_ms = (time.perf_counter() - started) * 1000.0
        timing = {
            "retrieve_ms": retrieve_ms,
            "fuse_ms": fuse_ms,
            "total_ms": total_ms,
            "index_queries": float(index_queries),
        }
        return ranked, timing

    @staticmethod
    def _require_vectors(query, method: str, config: PipelineConfig) -> None:
        if method in ("sparse", "dense"):
            alpha = config.alpha_hyb
            if alpha is None:
                alpha = 0.0 if method == "sparse" else 1.0
            needs_dense = alpha > 0.0
            needs_sparse = alpha < 1.0
        else:
            needs_dense = True
            needs_sparse = True
        if needs_dense and query.dense is None:
            raise VectorError(
                f"method {method!r} requires a dense query vector "
                f"(query {query.query_id!r} has none)"
            )
        if needs_sparse and query.sparse is None:
            raise VectorError(
                f"method {method!r} requires a sparse query vector "
                f"(query {query.query_id!r} has none)"
            )

    def _diversify(
        self,
        pool: RankedList,
        reference: DenseVec,
        config: PipelineConfig,
        vector_source: HybridIndex | FusedIndex,
    ) -> RankedList:
        found, missing = vector_source.fetch(pool.doc_ids())
        if missing:
            raise VectorError(f"pool documents missing from index: {missing[:5]}")
        return mmr_rerank(pool, reference, found, config.mmr_config())

    def dense_vectors(self, doc_ids: Sequence[str]) -> dict[str, DenseVec]:
        """Dense vectors by id, for diversity reporting across methods."""
        found, missing = self.hybrid.fetch(doc_ids)
        if missing:
            raise VectorError(f"documents missing from index: {missing[:5]}")
        return found

    def run_batch(
        self, queries: Iterable[QueryRecord], config: PipelineConfig
    ) -> tuple[dict[str, RankedList], LatencyStats, dict[str, str]]:
        """Run every query, collecting a run table and latency figures.

        Per-query failures are recorded and do not stop the batch; the
        failed query is simply absent from the run.
        """
        run: dict[str, RankedList] = {}
        timings: list[float] = []
        errors: dict[str, str] = {}
        for query in queries:
            try:
                ranked, timing = self.run_query(query, config)
            except VectorError as exc:
                logger.warning("query %s failed: %s", query.query_id, exc)
                errors[query.query_id] = str(exc)
                continue
            run[query.query_id] = ranked
            timings.append(timing["total_ms"])
        if not timings:
            raise VectorError("no query in the batch produced a result")
        return run, latency_stats(timings), errors

    def alpha_sweep(
        self,
        queries: Sequence[QueryRecord],
        alphas: Sequence[float],
        qrels: Qrels,
        config: PipelineConfig | None = None,
        k: int = 10,
    ) -> list[tuple[float, MetricReport]]:
        """Evaluate the single-pass method across query-side mix weights.

        The fused index is fixed (its document-side weight was chosen at
        ingest), so the sweep only rebuilds query vectors. Duplicate
        weights are evaluated once, with a warning.
        """
        base = config or PipelineConfig(method="proj")
        if base.method not in ("proj", "proj_mmr"):
            raise VectorError("alpha sweep applies to the proj methods only")
        seen: list[float] = []
        for alpha in alphas:
            if alpha in seen:
                logger.warning("alpha %s repeated in sweep; evaluating once", alpha)
            else:
                seen.append(alpha)
        results: list[tuple[float, MetricReport]] = []
        for alpha in seen:
            cfg = replace(base, alpha_query=alpha)
            run, _, errors = self.run_batch(queries, cfg)
            if errors:
                logger.warning("alpha %s: %d queries failed", alpha, len(errors))
            doc_vectors: dict[str, DenseVec] = {}
            for ranked in run.values():
                doc_vectors.update(self.dense_vectors(ranked.doc_ids()))
            report = evaluate_run(run, qrels, k=k, doc_vectors=doc_vectors)
            results.append((alpha, report))
        return results


@lru_cache(maxsize=4)
def _toy_projection(dense_dim: int, vocab_dim: int) -> ProjectionMatrix:
    return build_projection(TOY_PROJECTION_SEED, dense_dim, vocab_dim)


def _stable_term_id(token: str, vocab_dim: int) -> int:
    digest = blake2b(token.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") % vocab_dim


def toy_encode(
    text: str, dense_dim: int = DENSE_DIM, vocab_dim: int = VOCAB_DIM
) -> tuple[DenseVec, SparseVec]:
    """Deterministic text encoder for demos and end-to-end tests.

    Tokens are lowercased whitespace splits hashed to stable term ids
    (keyed hashing, not the per-process builtin hash), weighted by
    log(1 + count). The dense vector is the unit-normalised random
    projection of that sparse vector, so the two signals agree with each
    other the way a trained encoder pair roughly would.
    """
    tokens = text.lower().split()
    if not tokens:
        raise VectorError("text produced no tokens")
    counts: dict[int, int] = {}
    for token in tokens:
        term = _stable_term_id(token, vocab_dim)
        counts[term] = counts.get(term, 0) + 1
    indices = np.array(sorted(counts), dtype=np.int32)
    values = np.array(
        [math.log1p(counts[t]) for t in sorted(counts)], dtype=np.float32
    )
    sparse = SparseVec(indices, values, vocab_dim)
    projected = project(_toy_projection(dense_dim, vocab_dim), sparse)
    dense = l2_normalize(projected).astype(np.float32)
    return dense, sparse


def encode_query(
    query_id: str,
    text: str,
    dense_dim: int = DENSE_DIM,
    vocab_dim: int = VOCAB_DIM,
) -> QueryRecord:
    dense, sparse = toy_encode(text, dense_dim, vocab_dim)
    return QueryRecord(query_id=query_id, text=text, dense=dense, sparse=sparse)
