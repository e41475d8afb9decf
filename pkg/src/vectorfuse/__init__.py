"""Hybrid sparse and dense retrieval with single-pass fusion.

The package keeps two views of one corpus: a hybrid index scoring dense
and sparse signals separately (fused late, by reciprocal rank), and a
fused index whose vectors already carry both signals (one dot-product
query). An evaluation harness with TREC-style metrics, a CLI, and an
HTTP service sit on top.
"""

from .evaluation import MetricReport, evaluate_run, read_qrels, read_run, write_run
from .fusion import MmrConfig, RrfConfig, ild_at_k, mmr_rerank, rrf_fuse
from .index import AlphaHyb, FusedIndex, HybridIndex
from .model import (
    DENSE_DIM,
    VOCAB_DIM,
    DimensionMismatch,
    DocRecord,
    Hit,
    RankedList,
    SparseVec,
    VectorError,
    ZeroNormError,
)
from .pipeline import METHODS, PipelineConfig, Retriever, toy_encode
from .projection import (
    DEFAULT_PROJECTION_SEED,
    AlphaMix,
    ProjectionMatrix,
    build_projection,
    combine,
    fuse_document,
    project,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaHyb",
    "AlphaMix",
    "DENSE_DIM",
    "DEFAULT_PROJECTION_SEED",
    "DimensionMismatch",
    "DocRecord",
    "FusedIndex",
    "Hit",
    "HybridIndex",
    "METHODS",
    "MetricReport",
    "MmrConfig",
    "PipelineConfig",
    "ProjectionMatrix",
    "RankedList",
    "Retriever",
    "RrfConfig",
    "SparseVec",
    "VOCAB_DIM",
    "VectorError",
    "ZeroNormError",
    "build_projection",
    "combine",
    "evaluate_run",
    "fuse_document",
    "ild_at_k",
    "mmr_rerank",
    "project",
    "read_qrels",
    "read_run",
    "rrf_fuse",
    "toy_encode",
    "write_run",
    "__version__",
]
