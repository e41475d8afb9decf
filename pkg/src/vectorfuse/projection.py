"""Seeded sparse random projection and dense/projected vector mixing.

The projection matrix maps vocabulary-space sparse vectors into the dense
embedding space. Entries are drawn per (seed, column, row) from a
counter-based generator, so construction is bit-reproducible across runs
and platforms and any column can be regenerated independently. Entries are
+sqrt(3) with probability 1/6, -sqrt(3) with probability 1/6, and 0
otherwise, giving an expected non-zero density of 1/3.

The classical 1/sqrt(rows) projection scale factor is omitted here: the
retrieval pipeline L2-normalizes the projected vector immediately, which
makes the factor irrelevant to ranking. Callers verifying raw
distance-preservation properties should apply the scale themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse as sp

from .model import (
    DenseVec,
    DimensionMismatch,
    SparseVec,
    VectorError,
    ZeroNormError,
    l2_normalize,
)

DEFAULT_PROJECTION_SEED = 715


class ZeroProjectedError(ZeroNormError):
    """Mixing failed because the projected component vanished."""


_SQRT3 = math.sqrt(3.0)

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_GEN_CHUNK_COLS = 2048


def _mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer over a uint64 array; wraps modulo 2**64."""
    with np.errstate(over="ignore"):
        z = x + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _uniform_block(seed: int, rows: int, col_start: int, col_stop: int) -> np.ndarray:
    """Uniform [0,1) variates, shape (col_stop-col_start, rows).

    Variate (j, i) is derived from counter j*rows + i keyed by the seed, so
    the stream is a pure function of (seed, column, row).
    """
    base = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    cols = np.arange(col_start, col_stop, dtype=np.uint64)
    counters = cols[:, None] * np.uint64(rows) + np.arange(rows, dtype=np.uint64)[None, :]
    bits = _mix64(base ^ counters)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


@dataclass(frozen=True)
class ProjectionMatrix:
    """Column-stored signed sparse projection matrix with its generating seed."""

    seed: int
    rows: int
    cols: int
    matrix: sp.csc_matrix

    def column(self, j: int) -> np.ndarray:
        """Dense copy of column j (float64)."""
        return np.asarray(self.matrix[:, j].todense()).ravel()

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def density(self) -> float:
        return self.nnz / float(self.rows * self.cols)


@dataclass(frozen=True)
class AlphaMix:
    """Convex mixing weight between a dense vector and a projected one.

    `side` records whether the weight applies at query time or at document
    indexing time; the two are tuned independently.
    """

    value: float
    side: str = "query"

    DEFAULT_QUERY = 0.95
    DEFAULT_DOC = 0.50

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise VectorError(f"alpha must lie in [0, 1], got {self.value}")
        if self.side not in ("query", "document"):
            raise VectorError(f"alpha side must be 'query' or 'document', got {self.side!r}")

    @classmethod
    def for_query(cls, value: float = DEFAULT_QUERY) -> "AlphaMix":
        return cls(value, "query")

    @classmethod
    def for_document(cls, value: float = DEFAULT_DOC) -> "AlphaMix":
        return cls(value, "document")


def build_projection(seed: int, rows: int, cols: int) -> ProjectionMatrix:
    """Generate the signed sparse projection matrix for (seed, rows, cols).

    Deterministic: for each column j, each row i draws one uniform variate
    from the counter keyed by (seed, j, i); the entry is +sqrt(3) when
    u < 1/6, -sqrt(3) when u >= 5/6, else zero. Stored column-compressed.
    """
    if rows < 1 or cols < 1:
        raise VectorError(f"projection shape must be positive, got {rows}x{cols}")
    data_parts: list[np.ndarray] = []
    indices_parts: list[np.ndarray] = []
    counts_parts: list[np.ndarray] = []
    for col_start in range(0, cols, _GEN_CHUNK_COLS):
        col_stop = min(cols, col_start + _GEN_CHUNK_COLS)
        u = _uniform_block(seed, rows, col_start, col_stop)
        plus = u < (1.0 / 6.0)
        minus = u >= (5.0 / 6.0)
        nonzero = plus | minus
        col_local, row_idx = np.nonzero(nonzero)
        signs = np.where(plus[col_local, row_idx], _SQRT3, -_SQRT3)
        data_parts.append(signs)
        indices_parts.append(row_idx.astype(np.int32))
        counts_parts.append(np.count_nonzero(nonzero, axis=1))
    indptr = np.zeros(cols + 1, dtype=np.int64)
    np.cumsum(np.concatenate(counts_parts), out=indptr[1:])
    matrix = sp.csc_matrix(
        (np.concatenate(data_parts), np.concatenate(indices_parts), indptr),
        shape=(rows, cols),
    )
    return ProjectionMatrix(seed=seed, rows=rows, cols=cols, matrix=matrix)


def project(proj: ProjectionMatrix, s: SparseVec) -> DenseVec:
    """Multiply the projection matrix by a sparse vector.

    Touches only the columns in the vector's support, so cost is
    O(nnz(s) * rows / 3) expected. Returns float64; the empty vector maps
    to the zero vector.
    """
    if s.vocab_dim != proj.cols:
        raise DimensionMismatch(f"sparse vocab dim {s.vocab_dim} != projection cols {proj.cols}")
    if s.nnz == 0:
        return np.zeros(proj.rows, dtype=np.float64)
    sub = proj.matrix[:, s.indices]
    return np.asarray(sub @ s.values.astype(np.float64)).ravel()


def project_many(proj: ProjectionMatrix, vecs: list[SparseVec]) -> np.ndarray:
    """Project a batch of sparse vectors; returns shape (len(vecs), rows)."""
    if not vecs:
        return np.zeros((0, proj.rows), dtype=np.float64)
    for v in vecs:
        if v.vocab_dim != proj.cols:
            raise DimensionMismatch(f"sparse vocab dim {v.vocab_dim} != projection cols {proj.cols}")
    indptr = np.zeros(len(vecs) + 1, dtype=np.int64)
    np.cumsum([v.nnz for v in vecs], out=indptr[1:])
    if indptr[-1] == 0:
        return np.zeros((len(vecs), proj.rows), dtype=np.float64)
    stacked = sp.csc_matrix(
        (
            np.concatenate([v.values.astype(np.float64) for v in vecs]),
            np.concatenate([v.indices for v in vecs]),
            indptr,
        ),
        shape=(proj.cols, len(vecs)),
    )
    return np.asarray((proj.matrix @ stacked).todense()).T


def combine(d: DenseVec, p: DenseVec, alpha: AlphaMix) -> DenseVec:
    """Convex mix of the normalized dense and projected vectors, re-normalized.

    With alpha = 1 the projected side is ignored entirely, so a zero `p` is
    allowed there; otherwise a zero-norm `p` (or an exactly antipodal pair
    at alpha = 0.5) raises ZeroNormError with context.
    """
    d_hat = l2_normalize(d)
    if alpha.value == 1.0:
        return d_hat
    try:
        p_hat = l2_normalize(p)
    except VectorError as exc:
        raise ZeroProjectedError(
            f"projected vector has zero norm and alpha={alpha.value} < 1"
        ) from exc
    mixed = alpha.value * d_hat + (1.0 - alpha.value) * p_hat
    try:
        return l2_normalize(mixed)
    except VectorError as exc:
        raise ZeroProjectedError(
            f"dense and projected vectors cancel exactly at alpha={alpha.value}"
        ) from exc


def fuse_documents(docs, proj: ProjectionMatrix, alpha_doc: AlphaMix) -> None:
    """Set the fused vector on every record, projecting sparse parts in bulk.

    Bulk projection reorders floating point accumulation relative to the
    one-document path, so a collection should be fused entirely through
    one entry point or the other, not a mix of both.
    """
    rows = project_many(proj, [doc.sparse for doc in docs])
    for doc, projected in zip(docs, rows):
        try:
            doc.fused = combine(doc.dense, projected, alpha_doc)
        except ZeroProjectedError as exc:
            raise ZeroProjectedError(f"doc {doc.doc_id!r}: {exc}")


def fuse_document(doc, proj: ProjectionMatrix, alpha_doc: AlphaMix) -> DenseVec:
    """Pre-combine a document's dense and projected-sparse vectors.

    The result is stored on the record's `fused` field and returned.
    Documents with empty sparse vectors cannot be fused at alpha < 1; the
    error names the document so ingestion can report and skip it.
    """
    try:
        fused = combine(doc.dense, project(proj, doc.sparse), alpha_doc)
    except VectorError as exc:
        raise type(exc)(f"doc {doc.doc_id!r}: {exc}") from exc
    doc.fused = fused
    return fused
