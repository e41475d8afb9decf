"""Synthetic collection builders for benchmarks, demos, and tests.

Three flavours: flat random collections (scoring and latency work),
clustered collections whose documents bunch around topic centroids (for
diversity behaviour, where a relevance-only top list stays inside one
cluster), and a small text demo collection encoded with the toy encoder
so the full text-in / results-out path can be exercised end to end.
"""

from __future__ import annotations

import numpy as np

from .corpus import QueryRecord
from .evaluation import Qrels
from .model import DocRecord, SparseVec
from .pipeline import encode_query, toy_encode


def _unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.standard_normal((n, dim))
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return rows / norms


def _random_sparse(
    rng: np.random.Generator, vocab_dim: int, nnz: int
) -> SparseVec:
    indices = rng.choice(vocab_dim, size=min(nnz, vocab_dim), replace=False)
    indices = np.sort(indices).astype(np.int32)
    values = (np.abs(rng.standard_normal(indices.shape[0])) + 0.05).astype(np.float32)
    return SparseVec(indices, values, vocab_dim)


def random_records(
    n_docs: int,
    dense_dim: int,
    vocab_dim: int,
    seed: int,
    nnz: int = 20,
) -> list[DocRecord]:
    """Documents with independent random unit dense and random sparse vectors."""
    rng = np.random.default_rng(seed)
    dense = _unit_rows(rng, n_docs, dense_dim).astype(np.float32)
    records = []
    for i in range(n_docs):
        records.append(
            DocRecord(
                doc_id=f"d{i:06d}",
                title=f"document {i}",
                abstract="",
                dense=dense[i],
                sparse=_random_sparse(rng, vocab_dim, nnz),
            )
        )
    return records


def random_queries(
    n_queries: int,
    dense_dim: int,
    vocab_dim: int,
    seed: int,
    nnz: int = 8,
) -> list[QueryRecord]:
    rng = np.random.default_rng(seed)
    dense = _unit_rows(rng, n_queries, dense_dim).astype(np.float32)
    return [
        QueryRecord(
            query_id=f"q{i:03d}",
            text="",
            dense=dense[i],
            sparse=_random_sparse(rng, vocab_dim, nnz),
        )
        for i in range(n_queries)
    ]


def clustered_collection(
    n_clusters: int = 8,
    docs_per_cluster: int = 25,
    n_queries: int = 20,
    dense_dim: int = 64,
    vocab_dim: int = 2000,
    seed: int = 7,
    noise: float = 0.03,
) -> tuple[list[DocRecord], list[QueryRecord], Qrels]:
    """Topic-clustered documents with queries placed between cluster pairs.

    Each cluster owns a block of vocabulary terms and a dense centroid.
    Queries sit between two clusters in both signal spaces, so a
    relevance-only method fills its candidate pool from those clusters
    and a diversity re-ranker has real alternatives to promote. The
    default noise keeps clusters tight (intra-cluster cosine near 1), so
    trading a near-duplicate for a secondary-cluster document is always
    worth the relevance cost at moderate lambda. Qrels grade both home
    clusters of a query as relevant (grade 2 primary, grade 1 secondary).
    """
    if n_clusters > dense_dim:
        raise ValueError("clustered_collection needs n_clusters <= dense_dim")
    rng = np.random.default_rng(seed)
    # Orthonormal centroids pin every inter-cluster cosine at zero, so
    # the margin between "near duplicate" and "different topic" does not
    # depend on which cluster pair a query happens to straddle.
    basis, _ = np.linalg.qr(rng.standard_normal((dense_dim, n_clusters)))
    centers = basis.T
    terms_per_cluster = max(vocab_dim // n_clusters, 8)
    # Documents and queries draw from a small core vocabulary per
    # cluster, so same-cluster term overlap is the rule rather than a
    # lottery and the sparse signal ranks clusters as consistently as
    # the dense one does.
    core_terms = min(16, terms_per_cluster)
    # Every document also carries the same heavy block of background
    # terms, the way real corpora share boilerplate vocabulary. The
    # shared mass anchors each document's projected direction, so the
    # contrast between clusters after projection reflects the dense
    # signal rather than the luck of how each cluster's terms project.
    # Queries never use these terms, so term matching is unaffected.
    last_core_end = (n_clusters - 1) * terms_per_cluster + core_terms
    ballast_n = min(32, max(vocab_dim - last_core_end, 0))
    ballast_ids = np.arange(vocab_dim - ballast_n, vocab_dim, dtype=np.int32)
    ballast_values = np.full(ballast_n, 2.0, dtype=np.float32)

    records: list[DocRecord] = []
    for c in range(n_clusters):
        block_start = c * terms_per_cluster
        noise_rows = rng.standard_normal((docs_per_cluster, dense_dim)) * noise
        for j in range(docs_per_cluster):
            vec = centers[c] + noise_rows[j]
            vec = (vec / np.linalg.norm(vec)).astype(np.float32)
            term_count = int(rng.integers(10, 13))
            offsets = rng.choice(core_terms, size=term_count, replace=False)
            indices = np.sort(block_start + offsets).astype(np.int32)
            values = rng.uniform(0.6, 1.0, size=term_count).astype(np.float32)
            if ballast_n:
                indices = np.concatenate([indices, ballast_ids])
                values = np.concatenate([values, ballast_values])
            records.append(
                DocRecord(
                    doc_id=f"c{c:02d}-{j:03d}",
                    title=f"cluster {c} doc {j}",
                    abstract="",
                    dense=vec,
                    sparse=SparseVec(indices, values, vocab_dim),
                )
            )

    queries: list[QueryRecord] = []
    qrels: Qrels = {}
    for i in range(n_queries):
        a = int(rng.integers(n_clusters))
        b = int((a + 1 + rng.integers(n_clusters - 1)) % n_clusters)
        mix = centers[a] * 0.8 + centers[b] * 0.6 + rng.standard_normal(dense_dim) * noise
        dense = (mix / np.linalg.norm(mix)).astype(np.float32)
        # Heavy weights on the primary cluster's terms keep the sparse
        # signal aligned with the dense one, so relevance-only rankings
        # concentrate in cluster `a` and a re-ranker has room to improve
        # the list's diversity.
        parts: list[tuple[int, float]] = []
        for cluster, count, low, high in ((a, 5, 1.2, 2.0), (b, 3, 0.2, 0.5)):
            offsets = rng.choice(core_terms, size=count, replace=False)
            weights = rng.uniform(low, high, size=count)
            parts.extend(
                (cluster * terms_per_cluster + int(o), float(w))
                for o, w in zip(offsets, weights)
            )
        parts.sort()
        indices = np.array([term for term, _ in parts], dtype=np.int32)
        values = np.array([weight for _, weight in parts], dtype=np.float32)
        query_id = f"q{i:03d}"
        queries.append(
            QueryRecord(
                query_id=query_id,
                text="",
                dense=dense,
                sparse=SparseVec(indices, values, vocab_dim),
            )
        )
        grades: dict[str, int] = {}
        for doc in records:
            cluster = int(doc.doc_id[1:3])
            if cluster == a:
                grades[doc.doc_id] = 2
            elif cluster == b:
                grades[doc.doc_id] = 1
        qrels[query_id] = grades
    return records, queries, qrels


_DEMO_TOPICS = [
    (
        "storage",
        "disk cache tiering compaction wear leveling flash buffer eviction "
        "write amplification journal segment allocation",
    ),
    (
        "networking",
        "packet routing congestion window latency throughput handshake "
        "retransmission gateway peering backbone switch fabric",
    ),
    (
        "scheduling",
        "task queue preemption deadline fairness quantum affinity migration "
        "load balancing starvation priority inversion",
    ),
    (
        "compression",
        "entropy coding dictionary window huffman arithmetic block ratio "
        "symbol frequency stream decode table",
    ),
    (
        "security",
        "key exchange signature nonce certificate rotation audit token "
        "handshake replay attestation sandbox isolation",
    ),
]


def demo_collection(
    docs_per_topic: int = 12,
    dense_dim: int = 768,
    vocab_dim: int = 30522,
    seed: int = 11,
) -> tuple[list[DocRecord], list[QueryRecord], Qrels]:
    """A small text collection encoded with the toy encoder.

    Each document samples words from one topic's vocabulary, so queries
    built from topic words retrieve that topic's documents. Useful for
    the CLI walkthrough and the browser UI without any model downloads.
    """
    rng = np.random.default_rng(seed)
    records: list[DocRecord] = []
    for topic_idx, (topic, vocabulary) in enumerate(_DEMO_TOPICS):
        words = vocabulary.split()
        for j in range(docs_per_topic):
            k = int(rng.integers(8, 14))
            sampled = [words[int(w)] for w in rng.integers(0, len(words), size=k)]
            text = f"{topic} " + " ".join(sampled)
            dense, sparse = toy_encode(text, dense_dim, vocab_dim)
            records.append(
                DocRecord(
                    doc_id=f"{topic}-{j:02d}",
                    title=f"{topic} note {j}",
                    abstract=text,
                    dense=dense,
                    sparse=sparse,
                )
            )

    queries: list[QueryRecord] = []
    qrels: Qrels = {}
    for topic_idx, (topic, vocabulary) in enumerate(_DEMO_TOPICS):
        words = vocabulary.split()
        text = f"{topic} {words[0]} {words[1]} {words[2]}"
        query_id = f"q-{topic}"
        queries.append(encode_query(query_id, text, dense_dim, vocab_dim))
        qrels[query_id] = {
            doc.doc_id: 2 for doc in records if doc.doc_id.startswith(f"{topic}-")
        }
    return records, queries, qrels
