"""In-process vector indices: hybrid (dense + sparse) and fused dense-only.

Scoring is exact: dense similarity is a flat float64 scan over all stored
vectors and sparse similarity walks an inverted index whose accumulation
order matches `sparse_dot` term for term, so index scores are bitwise equal
to a brute-force pass. Ties are broken by ascending doc_id.

Concurrency: a per-index lock serializes queries and batch commits, so
every query sees a fully committed snapshot and counters stay coherent.

Snapshots are single binary files (little-endian, float32 vectors) with a
versioned magic header and a JSON metadata block recording dimensions and
the projection seed / alpha used to build the stored vectors.
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .model import (
    DenseVec,
    DimensionMismatch,
    DocRecord,
    Hit,
    RankedList,
    SparseVec,
    VectorError,
    as_dense,
    is_unit,
)

_MAGIC = b"VFIDX1\n"
_KIND_HYBRID = 1
_KIND_FUSED = 2


class AlphaHyb:
    """Query-time mixing weight between dense and sparse similarity.

    score = value * dense + (1 - value) * sparse; 0 is sparse-only,
    1 is dense-only.
    """

    __slots__ = ("value",)

    def __init__(self, value: float):
        if not 0.0 <= value <= 1.0:
            raise VectorError(f"alpha_hyb must lie in [0, 1], got {value}")
        self.value = float(value)

    def __repr__(self) -> str:
        return f"AlphaHyb({self.value})"


def _ranked_from_scores(
    query_id: str,
    scores: np.ndarray,
    doc_ids: list[str],
    lex_rank: np.ndarray,
    top_k: int,
) -> RankedList:
    order = np.lexsort((lex_rank, -scores))[:top_k]
    hits = [
        Hit(doc_ids[i], float(scores[i]), rank)
        for rank, i in enumerate(order.tolist(), 1)
    ]
    return RankedList(query_id=query_id, hits=hits)


class _BaseIndex:
    """Shared storage, caching, and snapshot plumbing for both index kinds."""

    kind: int

    def __init__(self, dense_dim: int, metadata: dict | None = None):
        self.dense_dim = dense_dim
        self.metadata: dict = dict(metadata or {})
        self.query_count = 0
        self._lock = threading.RLock()
        self._doc_ids: list[str] = []
        self._pos: dict[str, int] = {}
        self._dense32: list[np.ndarray] = []
        self._titles: list[str] = []
        self._abstracts: list[str] = []
        self._dense64: np.ndarray | None = None
        self._lex_rank: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._doc_ids)

    def doc_ids(self) -> list[str]:
        return list(self._doc_ids)

    def doc_meta(self, doc_id: str) -> tuple[str, str]:
        """(title, abstract) for a stored document."""
        pos = self._pos[doc_id]
        return self._titles[pos], self._abstracts[pos]

    def _invalidate(self) -> None:
        self._dense64 = None
        self._lex_rank = None

    def _ensure_caches(self) -> None:
        if self._dense64 is None:
            if self._dense32:
                self._dense64 = np.stack(self._dense32).astype(np.float64)
            else:
                self._dense64 = np.zeros((0, self.dense_dim), dtype=np.float64)
        if self._lex_rank is None:
            order = sorted(range(len(self._doc_ids)), key=lambda i: self._doc_ids[i])
            lex = np.empty(len(order), dtype=np.int64)
            for rank, i in enumerate(order):
                lex[i] = rank
            self._lex_rank = lex

    def _store(self, doc_id: str, dense32: np.ndarray, title: str, abstract: str) -> int:
        """Insert or replace one document's dense row; returns its position."""
        pos = self._pos.get(doc_id)
        if pos is None:
            pos = len(self._doc_ids)
            self._doc_ids.append(doc_id)
            self._pos[doc_id] = pos
            self._dense32.append(dense32)
            self._titles.append(title)
            self._abstracts.append(abstract)
        else:
            self._dense32[pos] = dense32
            self._titles[pos] = title
            self._abstracts[pos] = abstract
        return pos

    def fetch(self, ids: Sequence[str]) -> tuple[dict[str, DenseVec], list[str]]:
        """Dense vectors for the requested ids; unknown ids are reported, not fabricated."""
        with self._lock:
            found: dict[str, DenseVec] = {}
            missing: list[str] = []
            for doc_id in ids:
                pos = self._pos.get(doc_id)
                if pos is None:
                    missing.append(doc_id)
                else:
                    found[doc_id] = self._dense32[pos]
            return found, missing

    def content_digest(self) -> str:
        """SHA-256 over the canonical snapshot encoding of the current contents."""
        h = hashlib.sha256()
        for chunk in self._snapshot_chunks():
            h.update(chunk)
        return h.hexdigest()

    def save(self, path: str | Path) -> str:
        """Write the snapshot file; returns its content digest."""
        path = Path(path)
        h = hashlib.sha256()
        with self._lock, open(path, "wb") as fh:
            for chunk in self._snapshot_chunks():
                fh.write(chunk)
                h.update(chunk)
        return h.hexdigest()

    def _snapshot_chunks(self) -> Iterator[bytes]:
        meta = json.dumps(
            {"dense_dim": self.dense_dim, **self._extra_meta(), "metadata": self.metadata},
            sort_keys=True,
        ).encode()
        yield _MAGIC
        yield struct.pack("<BI", self.kind, len(meta))
        yield meta
        yield struct.pack("<I", len(self._doc_ids))
        for doc_id in sorted(self._doc_ids):
            pos = self._pos[doc_id]
            yield from self._doc_chunks(doc_id, pos)

    def _doc_header(self, doc_id: str, pos: int) -> bytes:
        ident = doc_id.encode()
        title = self._titles[pos].encode()
        abstract = self._abstracts[pos].encode()
        return b"".join(
            (
                struct.pack("<H", len(ident)),
                ident,
                struct.pack("<I", len(title)),
                title,
                struct.pack("<I", len(abstract)),
                abstract,
                self._dense32[pos].astype("<f4").tobytes(),
            )
        )

    def _extra_meta(self) -> dict:
        return {}

    def _doc_chunks(self, doc_id: str, pos: int) -> Iterator[bytes]:
        raise NotImplementedError


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise VectorError("truncated index snapshot")
    return data


def _load_header(fh) -> tuple[int, dict]:
    if _read_exact(fh, len(_MAGIC)) != _MAGIC:
        raise VectorError("not an index snapshot (bad magic)")
    kind, meta_len = struct.unpack("<BI", _read_exact(fh, 5))
    meta = json.loads(_read_exact(fh, meta_len))
    return kind, meta


def _read_doc_header(fh, dense_dim: int) -> tuple[str, str, str, np.ndarray]:
    (id_len,) = struct.unpack("<H", _read_exact(fh, 2))
    doc_id = _read_exact(fh, id_len).decode()
    (title_len,) = struct.unpack("<I", _read_exact(fh, 4))
    title = _read_exact(fh, title_len).decode()
    (abs_len,) = struct.unpack("<I", _read_exact(fh, 4))
    abstract = _read_exact(fh, abs_len).decode()
    dense = np.frombuffer(_read_exact(fh, 4 * dense_dim), dtype="<f4").copy()
    return doc_id, title, abstract, dense


class HybridIndex(_BaseIndex):
    """Flat dense scan plus inverted sparse postings over one document set."""

    kind = _KIND_HYBRID

    def __init__(self, dense_dim: int, vocab_dim: int, metadata: dict | None = None):
        super().__init__(dense_dim, metadata)
        self.vocab_dim = vocab_dim
        self._sparse: list[SparseVec] = []
        self._postings: dict[int, tuple[np.ndarray, np.ndarray]] | None = None

    def upsert(self, batch: Sequence[DocRecord]) -> int:
        """Insert or replace a batch atomically; returns documents stored.

        The whole batch is validated before anything is written, so a bad
        vector rejects the batch naming the offending document and leaves
        the index untouched.
        """
        if not batch:
            raise VectorError("upsert batch must be non-empty")
        for doc in batch:
            doc.validate(self.dense_dim, self.vocab_dim)
            if not is_unit(doc.dense):
                raise VectorError(f"doc {doc.doc_id!r}: dense vector is not unit-norm")
        with self._lock:
            for doc in batch:
                pos = self._store(doc.doc_id, as_dense(doc.dense, self.dense_dim), doc.title, doc.abstract)
                if pos == len(self._sparse):
                    self._sparse.append(doc.sparse)
                else:
                    self._sparse[pos] = doc.sparse
            self._invalidate()
            self._postings = None
        return len(batch)

    def sparse_vector(self, doc_id: str) -> SparseVec:
        return self._sparse[self._pos[doc_id]]

    def _ensure_postings(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        if self._postings is None:
            total = sum(s.nnz for s in self._sparse)
            terms = np.empty(total, dtype=np.int32)
            positions = np.empty(total, dtype=np.int64)
            values = np.empty(total, dtype=np.float32)
            at = 0
            for pos, s in enumerate(self._sparse):
                n = s.nnz
                terms[at : at + n] = s.indices
                positions[at : at + n] = pos
                values[at : at + n] = s.values
                at += n
            order = np.argsort(terms, kind="stable")
            terms = terms[order]
            positions = positions[order]
            values = values[order]
            postings: dict[int, tuple[np.ndarray, np.ndarray]] = {}
            uniq, starts = np.unique(terms, return_index=True)
            bounds = np.append(starts, total)
            for t, lo, hi in zip(uniq.tolist(), bounds[:-1].tolist(), bounds[1:].tolist()):
                postings[t] = (positions[lo:hi], values[lo:hi])
            self._postings = postings
        return self._postings

    def query(
        self,
        dense_q: DenseVec | None,
        sparse_q: SparseVec | None,
        alpha_hyb: AlphaHyb,
        top_k: int,
    ) -> RankedList:
        """Convex mix of dense and sparse similarity over every document.

        A missing dense query is allowed at alpha 0 and a missing sparse
        query at alpha 1, matching the single-signal retrieval modes.
        """
        if top_k < 1:
            raise VectorError(f"top_k must be >= 1, got {top_k}")
        alpha = alpha_hyb.value
        if dense_q is None and alpha > 0.0:
            raise VectorError("dense query vector required when alpha_hyb > 0")
        if sparse_q is None and alpha < 1.0:
            raise VectorError("sparse query vector required when alpha_hyb < 1")
        if dense_q is not None and dense_q.shape[0] != self.dense_dim:
            raise DimensionMismatch(
                f"query dense dim {dense_q.shape[0]} != index dim {self.dense_dim}"
            )
        if sparse_q is not None and sparse_q.vocab_dim != self.vocab_dim:
            raise DimensionMismatch(
                f"query vocab dim {sparse_q.vocab_dim} != index vocab {self.vocab_dim}"
            )
        with self._lock:
            self.query_count += 1
            n = len(self._doc_ids)
            if n == 0:
                return RankedList(query_id="", hits=[])
            self._ensure_caches()
            if alpha > 0.0:
                dense_scores = self._dense64 @ dense_q.astype(np.float64)
            else:
                dense_scores = np.zeros(n, dtype=np.float64)
            sparse_scores = np.zeros(n, dtype=np.float64)
            if alpha < 1.0 and sparse_q is not None and sparse_q.nnz:
                postings = self._ensure_postings()
                qv = sparse_q.values.astype(np.float64)
                for j, q_val in zip(sparse_q.indices.tolist(), qv.tolist()):
                    entry = postings.get(j)
                    if entry is not None:
                        positions, values = entry
                        sparse_scores[positions] += q_val * values.astype(np.float64)
            if alpha == 0.0:
                scores = sparse_scores
            elif alpha == 1.0:
                scores = dense_scores
            else:
                scores = alpha * dense_scores + (1.0 - alpha) * sparse_scores
            return _ranked_from_scores("", scores, self._doc_ids, self._lex_rank, top_k)

    def _extra_meta(self) -> dict:
        return {"vocab_dim": self.vocab_dim}

    def _doc_chunks(self, doc_id: str, pos: int) -> Iterator[bytes]:
        yield self._doc_header(doc_id, pos)
        s = self._sparse[pos]
        yield struct.pack("<I", s.nnz)
        yield s.indices.astype("<i4").tobytes()
        yield s.values.astype("<f4").tobytes()

    @classmethod
    def load(cls, path: str | Path) -> "HybridIndex":
        with open(path, "rb") as fh:
            kind, meta = _load_header(fh)
            if kind != _KIND_HYBRID:
                raise VectorError("snapshot is not a hybrid index")
            index = cls(meta["dense_dim"], meta["vocab_dim"], meta.get("metadata"))
            (count,) = struct.unpack("<I", _read_exact(fh, 4))
            records = []
            for _ in range(count):
                doc_id, title, abstract, dense = _read_doc_header(fh, index.dense_dim)
                (nnz,) = struct.unpack("<I", _read_exact(fh, 4))
                idx = np.frombuffer(_read_exact(fh, 4 * nnz), dtype="<i4").copy()
                val = np.frombuffer(_read_exact(fh, 4 * nnz), dtype="<f4").copy()
                records.append(
                    DocRecord(doc_id, title, abstract, dense, SparseVec(idx, val, index.vocab_dim))
                )
            if records:
                index.upsert(records)
            return index


class FusedIndex(_BaseIndex):
    """Dense-only index over pre-combined vectors, queried by dot product."""

    kind = _KIND_FUSED

    def upsert(self, batch: Sequence[DocRecord]) -> int:
        """Store each record's fused vector; the whole batch validates first."""
        if not batch:
            raise VectorError("upsert batch must be non-empty")
        for doc in batch:
            if doc.fused is None:
                raise VectorError(f"doc {doc.doc_id!r}: missing fused vector")
            if doc.fused.shape[0] != self.dense_dim:
                raise DimensionMismatch(
                    f"doc {doc.doc_id!r}: fused dim {doc.fused.shape[0]}, expected {self.dense_dim}"
                )
            if not is_unit(doc.fused):
                raise VectorError(f"doc {doc.doc_id!r}: fused vector is not unit-norm")
        with self._lock:
            for doc in batch:
                self._store(doc.doc_id, as_dense(doc.fused, self.dense_dim), doc.title, doc.abstract)
            self._invalidate()
        return len(batch)

    def query(self, q: DenseVec, top_k: int) -> RankedList:
        """Top-k by dot product against the stored fused vectors."""
        if top_k < 1:
            raise VectorError(f"top_k must be >= 1, got {top_k}")
        if q.shape[0] != self.dense_dim:
            raise DimensionMismatch(f"query dim {q.shape[0]} != index dim {self.dense_dim}")
        with self._lock:
            self.query_count += 1
            if not self._doc_ids:
                return RankedList(query_id="", hits=[])
            self._ensure_caches()
            scores = self._dense64 @ q.astype(np.float64)
            return _ranked_from_scores("", scores, self._doc_ids, self._lex_rank, top_k)

    def _doc_chunks(self, doc_id: str, pos: int) -> Iterator[bytes]:
        yield self._doc_header(doc_id, pos)

    @classmethod
    def load(cls, path: str | Path) -> "FusedIndex":
        with open(path, "rb") as fh:
            kind, meta = _load_header(fh)
            if kind != _KIND_FUSED:
                raise VectorError("snapshot is not a fused index")
            index = cls(meta["dense_dim"], meta.get("metadata"))
            (count,) = struct.unpack("<I", _read_exact(fh, 4))
            records = []
            for _ in range(count):
                doc_id, title, abstract, dense = _read_doc_header(fh, index.dense_dim)
                records.append(
                    DocRecord(
                        doc_id,
                        title,
                        abstract,
                        dense,
                        SparseVec.empty(1),
                        fused=dense,
                    )
                )
            if records:
                index.upsert(records)
            return index
