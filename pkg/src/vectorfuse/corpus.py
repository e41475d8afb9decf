"""Corpus and query file handling plus resumable batched ingestion.

Corpora and query sets are JSON Lines files: one object per line with the
precomputed dense vector and the sparse term weights inline. Ingestion
walks the corpus in fixed-size batches, committing each batch to both the
hybrid and the fused index atomically, then persisting fresh snapshots
and a checkpoint before touching the next batch. A killed ingest resumes
from the first uncommitted batch against the same corpus file; a changed
file is refused by digest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .index import FusedIndex, HybridIndex
from .model import DocRecord, SparseVec, VectorError, as_dense
from .projection import AlphaMix, ProjectionMatrix, ZeroProjectedError, fuse_document

HYBRID_SNAPSHOT = "hybrid.idx"
FUSED_SNAPSHOT = "fused.idx"
CHECKPOINT_FILE = "checkpoint.json"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_sparse(obj: dict, vocab_dim: int, where: str) -> SparseVec:
    try:
        indices = np.asarray(obj["indices"], dtype=np.int32)
        values = np.asarray(obj["values"], dtype=np.float32)
    except (KeyError, TypeError, ValueError) as exc:
        raise VectorError(f"{where}: bad sparse vector: {exc}")
    if indices.shape != values.shape:
        raise VectorError(f"{where}: sparse indices/values length mismatch")
    return SparseVec(indices, values, vocab_dim)


def iter_corpus(path: str | Path, dense_dim: int, vocab_dim: int) -> Iterator[DocRecord]:
    """Stream corpus records, validating each line as it is read."""
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise VectorError(f"{where}: invalid JSON: {exc}")
            try:
                doc_id = obj["doc_id"]
                dense = as_dense(np.asarray(obj["dense"], dtype=np.float32), dense_dim)
            except KeyError as exc:
                raise VectorError(f"{where}: missing field {exc}")
            sparse = _parse_sparse(obj.get("sparse", {"indices": [], "values": []}), vocab_dim, where)
            yield DocRecord(
                doc_id=doc_id,
                title=obj.get("title", ""),
                abstract=obj.get("abstract", ""),
                dense=dense,
                sparse=sparse,
            )


def _iter_corpus_lenient(
    path: str | Path, dense_dim: int, vocab_dim: int, skipped: dict[str, str]
) -> Iterator[DocRecord]:
    """Stream corpus records for ingestion, recording bad lines as skips.

    A record that cannot be parsed or validated is noted under its doc_id
    (or its line number when even that is missing) and left out, matching
    the ingest contract that malformed and empty records never abort a
    build, they get reported.
    """
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            where = f"line {lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                skipped[where] = f"invalid JSON: {exc}"
                continue
            if not isinstance(obj, dict):
                skipped[where] = "record is not an object"
                continue
            key = obj.get("doc_id") or where
            if obj.get("dense") is None and not obj.get("sparse", {}).get("values"):
                skipped[key] = "empty record (no vectors)"
                continue
            try:
                dense = as_dense(np.asarray(obj.get("dense"), dtype=np.float32), dense_dim)
                sparse = _parse_sparse(
                    obj.get("sparse", {"indices": [], "values": []}), vocab_dim, where
                )
                record = DocRecord(
                    doc_id=obj["doc_id"],
                    title=obj.get("title", ""),
                    abstract=obj.get("abstract", ""),
                    dense=dense,
                    sparse=sparse,
                )
                record.validate(dense_dim, vocab_dim)
            except (VectorError, KeyError, TypeError, ValueError) as exc:
                skipped[key] = f"malformed record: {exc}"
                continue
            yield record


def write_corpus(records: Iterable[DocRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w") as fh:
        for doc in records:
            fh.write(
                json.dumps(
                    {
                        "doc_id": doc.doc_id,
                        "title": doc.title,
                        "abstract": doc.abstract,
                        "dense": [float(x) for x in doc.dense],
                        "sparse": {
                            "indices": doc.sparse.indices.tolist(),
                            "values": [float(v) for v in doc.sparse.values],
                        },
                    }
                )
                + "\n"
            )
            count += 1
    return count


@dataclass
class QueryRecord:
    """One query, carrying text, precomputed vectors, or both.

    A record needs text or at least one vector. Which vectors a method
    actually requires is checked at query time, so a sparse-only record
    is fine for sparse-only retrieval.
    """

    query_id: str
    text: str
    dense: np.ndarray | None
    sparse: SparseVec | None

    def __post_init__(self) -> None:
        if not self.query_id:
            raise VectorError("query_id must be non-empty")
        if not self.text and self.dense is None and self.sparse is None:
            raise VectorError(
                f"query {self.query_id!r} has neither text nor vectors"
            )


def iter_queries(path: str | Path, dense_dim: int, vocab_dim: int) -> Iterator[QueryRecord]:
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise VectorError(f"{where}: invalid JSON: {exc}")
            if "query_id" not in obj:
                raise VectorError(f"{where}: missing field 'query_id'")
            dense = None
            if obj.get("dense") is not None:
                dense = as_dense(np.asarray(obj["dense"], dtype=np.float32), dense_dim)
            sparse = None
            if obj.get("sparse") is not None:
                sparse = _parse_sparse(obj["sparse"], vocab_dim, where)
            try:
                yield QueryRecord(obj["query_id"], obj.get("text", ""), dense, sparse)
            except VectorError as exc:
                raise VectorError(f"{where}: {exc}")


def write_queries(queries: Iterable[QueryRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w") as fh:
        for q in queries:
            obj: dict = {"query_id": q.query_id, "text": q.text}
            if q.dense is not None:
                obj["dense"] = [float(x) for x in q.dense]
            if q.sparse is not None:
                obj["sparse"] = {
                    "indices": q.sparse.indices.tolist(),
                    "values": [float(v) for v in q.sparse.values],
                }
            fh.write(json.dumps(obj) + "\n")
            count += 1
    return count


@dataclass
class IngestCheckpoint:
    """Progress marker written after every committed batch."""

    corpus_digest: str
    batch_size: int
    last_completed_batch: int
    ingested: int
    skipped: dict[str, str] = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "corpus_digest": self.corpus_digest,
                    "batch_size": self.batch_size,
                    "last_completed_batch": self.last_completed_batch,
                    "ingested": self.ingested,
                    "skipped": self.skipped,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "IngestCheckpoint":
        obj = json.loads(Path(path).read_text())
        return cls(
            corpus_digest=obj["corpus_digest"],
            batch_size=obj["batch_size"],
            last_completed_batch=obj["last_completed_batch"],
            ingested=obj["ingested"],
            skipped=dict(obj["skipped"]),
        )


@dataclass
class IngestSummary:
    ingested: int
    skipped: dict[str, str]
    batches: int
    resumed_from_batch: int | None
    hybrid_digest: str
    fused_digest: str


def _batched(records: Iterator[DocRecord], size: int) -> Iterator[list[DocRecord]]:
    batch: list[DocRecord] = []
    for doc in records:
        batch.append(doc)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def ingest_corpus(
    corpus_path: str | Path,
    workdir: str | Path,
    projection: ProjectionMatrix,
    alpha_doc: AlphaMix | None = None,
    batch_size: int = 100,
    resume: bool = False,
    vocab_dim: int | None = None,
    encoder: str = "precomputed",
) -> IngestSummary:
    """Build (or extend) both index snapshots from a corpus file.

    Every batch is validated, fused, and committed as a unit; snapshots
    and the checkpoint are rewritten only after the commit, so a crash at
    any point loses at most one uncommitted batch. Resuming re-reads the
    corpus, verifies its digest against the checkpoint, skips the batches
    already committed, and carries on.

    Documents with an empty sparse vector cannot take part in sparse
    scoring or fusion projection, so they are skipped entirely (from both
    indices) and reported by id.
    """
    corpus_path = Path(corpus_path)
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    if alpha_doc is None:
        alpha_doc = AlphaMix.for_document()
    dense_dim = projection.rows
    vocab = vocab_dim if vocab_dim is not None else projection.cols
    if vocab != projection.cols:
        raise VectorError(
            f"vocab_dim {vocab} does not match projection columns {projection.cols}"
        )
    if batch_size < 1:
        raise VectorError(f"batch_size must be >= 1, got {batch_size}")

    digest = file_digest(corpus_path)
    checkpoint_path = workdir / CHECKPOINT_FILE
    hybrid_path = workdir / HYBRID_SNAPSHOT
    fused_path = workdir / FUSED_SNAPSHOT
    index_meta = {
        "projection_seed": projection.seed,
        "alpha_doc": alpha_doc.value,
        "corpus_digest": digest,
        "encoder": encoder,
    }

    resumed_from: int | None = None
    if resume and checkpoint_path.exists():
        ckpt = IngestCheckpoint.load(checkpoint_path)
        if ckpt.corpus_digest != digest:
            raise VectorError(
                "corpus file changed since the checkpoint was written "
                f"(digest {digest[:12]} != checkpoint {ckpt.corpus_digest[:12]})"
            )
        if ckpt.batch_size != batch_size:
            raise VectorError(
                f"checkpoint batch_size {ckpt.batch_size} != requested {batch_size}"
            )
        hybrid = HybridIndex.load(hybrid_path)
        fused = FusedIndex.load(fused_path)
        resumed_from = ckpt.last_completed_batch + 1
    else:
        ckpt = IngestCheckpoint(
            corpus_digest=digest,
            batch_size=batch_size,
            last_completed_batch=0,
            ingested=0,
        )
        hybrid = HybridIndex(dense_dim, vocab, metadata=index_meta)
        fused = FusedIndex(dense_dim, metadata=index_meta)

    records = _iter_corpus_lenient(corpus_path, dense_dim, vocab, ckpt.skipped)
    batches = 0
    for batch_no, batch in enumerate(_batched(records, batch_size), start=1):
        batches = batch_no
        if batch_no <= ckpt.last_completed_batch:
            continue
        keep: list[DocRecord] = []
        for doc in batch:
            if doc.sparse.nnz == 0:
                ckpt.skipped[doc.doc_id] = "empty sparse vector"
                continue
            try:
                fuse_document(doc, projection, alpha_doc)
            except ZeroProjectedError as exc:
                ckpt.skipped[doc.doc_id] = str(exc)
                continue
            keep.append(doc)
        if keep:
            hybrid.upsert(keep)
            fused.upsert(keep)
            ckpt.ingested += len(keep)
        hybrid.save(hybrid_path)
        fused.save(fused_path)
        ckpt.last_completed_batch = batch_no
        ckpt.save(checkpoint_path)

    return IngestSummary(
        ingested=ckpt.ingested,
        skipped=dict(ckpt.skipped),
        batches=batches,
        resumed_from_batch=resumed_from,
        hybrid_digest=hybrid.content_digest(),
        fused_digest=fused.content_digest(),
    )
