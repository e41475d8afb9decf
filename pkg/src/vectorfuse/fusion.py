"""Rank fusion and diversity re-ranking.

Two late-fusion stages live here: weighted reciprocal rank fusion over
per-signal ranked lists, and maximal marginal relevance re-ranking of a
candidate pool against a query vector. Both break score ties by ascending
doc_id so results are reproducible across runs and platforms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import DenseVec, Hit, RankedList, VectorError, cosine, l2_normalize, rank_hits

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RrfConfig:
    """Weighted reciprocal rank fusion parameters.

    `weights` pairs positionally with the ranked lists handed to
    `rrf_fuse`; the defaults weight a dense list at 0.6 and a sparse list
    at 0.4 with the usual rank damping constant of 60.
    """

    k: float = 60.0
    weights: tuple[float, ...] = (0.6, 0.4)

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise VectorError(f"rrf k must be positive, got {self.k}")
        if not self.weights:
            raise VectorError("rrf needs at least one list weight")
        if any(w < 0 for w in self.weights):
            raise VectorError(f"rrf weights must be non-negative, got {self.weights}")
        if all(w == 0 for w in self.weights):
            raise VectorError("at least one rrf weight must be positive")


@dataclass(frozen=True)
class MmrConfig:
    """Maximal marginal relevance parameters.

    lambda_param trades relevance against novelty: 1 ranks by relevance
    alone, 0 ranks purely by dissimilarity to prior picks. The relevance
    term is cosine to the query reference by default; score_relevance
    substitutes each candidate's incoming retrieval score instead, an
    ablation knob (note the two live on different scales).
    """

    lambda_param: float = 0.7
    pool_size: int = 50
    output_size: int = 10
    score_relevance: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.lambda_param <= 1.0:
            raise VectorError(
                f"mmr lambda must lie in [0, 1], got {self.lambda_param}"
            )
        if self.pool_size < 1 or self.output_size < 1:
            raise VectorError("mmr pool_size and output_size must be >= 1")
        if self.output_size > self.pool_size:
            raise VectorError(
                f"mmr output_size {self.output_size} exceeds pool_size {self.pool_size}"
            )


def rrf_fuse(
    lists: Sequence[RankedList],
    config: RrfConfig = RrfConfig(),
    top_k: int | None = None,
) -> RankedList:
    """Fuse ranked lists into one by weighted reciprocal rank.

    Each document scores sum(w_i / (k + rank_i)) over the lists that
    contain it, using that list's 1-based rank. Documents absent from a
    list simply contribute nothing for it.
    """
    if len(lists) != len(config.weights):
        raise VectorError(
            f"got {len(lists)} ranked lists but {len(config.weights)} weights"
        )
    query_ids = {ranked.query_id for ranked in lists}
    if len(query_ids) > 1:
        raise VectorError(f"rrf inputs mix query_ids: {sorted(query_ids)}")
    query_id = lists[0].query_id if lists else ""
    scores: dict[str, float] = {}
    for ranked, weight in zip(lists, config.weights):
        for hit in ranked.hits:
            scores[hit.doc_id] = scores.get(hit.doc_id, 0.0) + weight / (
                config.k + hit.rank
            )
    fused = rank_hits(scores.items(), top_k=top_k)
    return RankedList(query_id=query_id, hits=fused)


def mmr_rerank(
    pool: RankedList,
    query_vec: DenseVec,
    doc_vecs: Mapping[str, DenseVec],
    config: MmrConfig = MmrConfig(),
) -> RankedList:
    """Greedily re-rank a candidate pool by marginal relevance.

    The first pick is the most query-similar candidate. Every later pick
    maximises lambda * sim(d, q) - (1 - lambda) * max_s sim(d, s) over the
    already selected set s, with ties going to the smaller doc_id. Each
    hit's score is the objective value at the moment it was chosen, so the
    first hit carries its raw query similarity.
    """
    candidates = [hit.doc_id for hit in pool.hits[: config.pool_size]]
    missing = [d for d in candidates if d not in doc_vecs]
    if missing:
        raise VectorError(f"mmr pool has no vectors for: {missing[:5]}")
    if not candidates:
        return RankedList(query_id=pool.query_id, hits=[])

    q = l2_normalize(query_vec)
    mat = np.stack([doc_vecs[d] for d in candidates]).astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        bad = candidates[int(np.argmin(norms))]
        raise VectorError(f"mmr candidate {bad!r} has a zero vector")
    unit = mat / norms[:, None]
    if config.score_relevance:
        rel = np.array([hit.score for hit in pool.hits[: config.pool_size]])
    else:
        rel = np.clip(unit @ q, -1.0, 1.0)

    lam = config.lambda_param
    n = len(candidates)
    selected: list[int] = []
    max_sim = np.full(n, -np.inf)
    remaining = set(range(n))
    hits: list[Hit] = []
    while remaining and len(selected) < config.output_size:
        best_i = -1
        best_obj = -np.inf
        for i in sorted(remaining, key=lambda i: candidates[i]):
            if selected:
                obj = lam * rel[i] - (1.0 - lam) * max_sim[i]
            else:
                obj = rel[i]
            if obj > best_obj:
                best_obj = obj
                best_i = i
        selected.append(best_i)
        remaining.discard(best_i)
        hits.append(Hit(candidates[best_i], float(best_obj), len(selected)))
        if remaining:
            sims = np.clip(unit @ unit[best_i], -1.0, 1.0)
            np.maximum(max_sim, sims, out=max_sim)
    return RankedList(query_id=pool.query_id, hits=hits)


def ild_at_k(vectors: Sequence[DenseVec], k: int = 10) -> float:
    """Mean pairwise (1 - cosine) over the first k vectors.

    A list with fewer than two vectors has no pairs; that yields 0.0 and a
    logged warning rather than an error, since single-hit result lists are
    legitimate on small corpora.
    """
    vecs = list(vectors[:k])
    if len(vecs) < 2:
        logger.warning("ild needs >= 2 vectors, got %d; reporting 0.0", len(vecs))
        return 0.0
    total = 0.0
    pairs = 0
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            total += 1.0 - cosine(vecs[i], vecs[j])
            pairs += 1
    return total / pairs
