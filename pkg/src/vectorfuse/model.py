"""Core domain types and vector arithmetic shared by every other module.

Conventions: dense vectors are 1-D numpy float arrays (float32 at rest in
indices and files, float64 while computing); sparse vectors are sorted
(index, value) pairs over a fixed vocabulary. All types are immutable
values after construction and all operations here are pure functions, so
everything in this module is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DENSE_DIM = 768
VOCAB_DIM = 30522

UNIT_NORM_TOL = 1e-5

DenseVec = np.ndarray


class VectorError(ValueError):
    """A vector violates a structural or numeric precondition."""


class DimensionMismatch(VectorError):
    """Two vectors (or a vector and an index) disagree on dimensionality."""


class ZeroNormError(VectorError):
    """An operation requiring a non-zero vector received a zero one.

    A zero vector here usually means a query or document activated no
    vocabulary terms; callers must surface that instead of silently
    retrieving nothing.
    """


def as_dense(values: Sequence[float] | np.ndarray, dim: int | None = None) -> DenseVec:
    """Validate and convert `values` into a float32 dense vector.

    Raises DimensionMismatch if `dim` is given and does not match, and
    VectorError on non-finite entries.
    """
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 1:
        raise VectorError(f"dense vector must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"dense vector has dim {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise VectorError("dense vector contains non-finite entries")
    return arr


def is_unit(v: DenseVec, tol: float = UNIT_NORM_TOL) -> bool:
    """True if the L2 norm of `v` is within `tol` of 1."""
    return abs(float(np.linalg.norm(v.astype(np.float64))) - 1.0) <= tol


def dot(a: DenseVec, b: DenseVec) -> float:
    """Dot product of two dense vectors, accumulated in float64."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"dense dims differ: {a.shape[0]} vs {b.shape[0]}")
    return float(np.dot(a.astype(np.float64), b.astype(np.float64)))


def l2_normalize(v: DenseVec) -> DenseVec:
    """Scale `v` to unit L2 norm (float64 output).

    Raises ZeroNormError for the zero vector: a degenerate input must be
    surfaced to the caller, not mapped to zero.
    """
    v64 = v.astype(np.float64)
    norm = float(np.linalg.norm(v64))
    if norm == 0.0:
        raise ZeroNormError("cannot normalize a zero-norm vector")
    return v64 / norm


def cosine(a: DenseVec, b: DenseVec) -> float:
    """Cosine similarity, clamped to [-1, 1]. Raises on zero-norm input."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"dense dims differ: {a.shape[0]} vs {b.shape[0]}")
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    na = float(np.linalg.norm(a64))
    nb = float(np.linalg.norm(b64))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine undefined for zero-norm vectors")
    return max(-1.0, min(1.0, float(np.dot(a64, b64)) / (na * nb)))


@dataclass(frozen=True, eq=False)
class SparseVec:
    """Sparse vector as parallel (indices, values) arrays over a vocabulary.

    Indices are strictly increasing and all below `vocab_dim`; values are
    positive and finite (zero entries are omitted). Arrays are stored
    read-only.
    """

    indices: np.ndarray
    values: np.ndarray
    vocab_dim: int = VOCAB_DIM

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int32)
        val = np.asarray(self.values, dtype=np.float32)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape[0] != val.shape[0]:
            raise VectorError("sparse indices and values must be 1-D and equal length")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise VectorError("sparse indices must be strictly increasing")
            if idx[0] < 0 or int(idx[-1]) >= self.vocab_dim:
                raise VectorError(
                    f"sparse index out of range [0, {self.vocab_dim}): "
                    f"[{int(idx[0])}, {int(idx[-1])}]"
                )
            if not np.all(np.isfinite(val)) or np.any(val <= 0):
                raise VectorError("sparse values must be positive and finite")
        idx.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def empty(cls, vocab_dim: int = VOCAB_DIM) -> "SparseVec":
        return cls(np.empty(0, dtype=np.int32), np.empty(0, dtype=np.float32), vocab_dim)

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[int, float]], vocab_dim: int = VOCAB_DIM
    ) -> "SparseVec":
        """Build from (index, value) pairs in any order."""
        items = sorted(pairs)
        idx = np.array([i for i, _ in items], dtype=np.int32)
        val = np.array([v for _, v in items], dtype=np.float32)
        return cls(idx, val, vocab_dim)

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def norm(self) -> float:
        return math.sqrt(float(np.dot(self.values.astype(np.float64), self.values.astype(np.float64))))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVec):
            return NotImplemented
        return (
            self.vocab_dim == other.vocab_dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:  # frozen dataclass with eq=False would supply one; keep explicit
        return hash((self.vocab_dim, self.indices.tobytes(), self.values.tobytes()))


def sparse_dot(a: SparseVec, b: SparseVec) -> float:
    """Dot product over shared indices; 0.0 for disjoint supports.

    Accumulates in float64 in ascending index order, matching the posting
    traversal order of the inverted index so both paths agree bitwise.
    """
    if a.vocab_dim != b.vocab_dim:
        raise DimensionMismatch(f"vocab dims differ: {a.vocab_dim} vs {b.vocab_dim}")
    if a.nnz == 0 or b.nnz == 0:
        return 0.0
    shared_a = np.isin(a.indices, b.indices)
    if not shared_a.any():
        return 0.0
    shared_idx = a.indices[shared_a]
    pos_b = np.searchsorted(b.indices, shared_idx)
    av = a.values[shared_a].astype(np.float64)
    bv = b.values[pos_b].astype(np.float64)
    total = 0.0
    for x, y in zip(av, bv):
        total += x * y
    return total


@dataclass
class DocRecord:
    """Per-document payload: identifier, display text, and its vectors.

    `fused` is the optional pre-combined single-pass retrieval vector; when
    present it must be unit-norm.
    """

    doc_id: str
    title: str
    abstract: str
    dense: DenseVec
    sparse: SparseVec
    fused: DenseVec | None = None

    def validate(self, dense_dim: int, vocab_dim: int) -> None:
        if not self.doc_id:
            raise VectorError("doc_id must be non-empty")
        if self.dense.shape[0] != dense_dim:
            raise DimensionMismatch(
                f"doc {self.doc_id!r}: dense dim {self.dense.shape[0]}, expected {dense_dim}"
            )
        if not np.all(np.isfinite(self.dense)):
            raise VectorError(f"doc {self.doc_id!r}: dense vector has non-finite entries")
        if self.sparse.vocab_dim != vocab_dim:
            raise DimensionMismatch(
                f"doc {self.doc_id!r}: vocab dim {self.sparse.vocab_dim}, expected {vocab_dim}"
            )
        if self.fused is not None and not is_unit(self.fused):
            raise VectorError(f"doc {self.doc_id!r}: fused vector is not unit-norm")


@dataclass(frozen=True)
class Hit:
    """One retrieved document at a 1-based rank."""

    doc_id: str
    score: float
    rank: int


@dataclass
class RankedList:
    """Ordered hits for one query. Ranks run 1..n with no duplicates."""

    query_id: str
    hits: list[Hit] = field(default_factory=list)

    def doc_ids(self) -> list[str]:
        return [h.doc_id for h in self.hits]

    def validate(self) -> None:
        seen: set[str] = set()
        prev_score = math.inf
        for i, hit in enumerate(self.hits, 1):
            if hit.rank != i:
                raise VectorError(f"ranks must be 1..n contiguous; got {hit.rank} at position {i}")
            if hit.doc_id in seen:
                raise VectorError(f"duplicate doc_id {hit.doc_id!r} in ranked list")
            seen.add(hit.doc_id)
            if hit.score > prev_score:
                raise VectorError("scores must be non-increasing with rank")
            prev_score = hit.score


def rank_hits(scored: Iterable[tuple[str, float]], top_k: int | None = None) -> list[Hit]:
    """Order (doc_id, score) pairs by score descending, ties by ascending doc_id.

    The tie rule keeps runs reproducible across platforms.
    """
    ordered = sorted(scored, key=lambda t: (-t[1], t[0]))
    if top_k is not None:
        ordered = ordered[:top_k]
    return [Hit(doc_id, float(score), rank) for rank, (doc_id, score) in enumerate(ordered, 1)]
