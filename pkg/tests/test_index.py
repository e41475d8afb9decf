"""Hybrid and fused indices against a brute-force scoring oracle."""

import numpy as np
import pytest

from vectorfuse.index import AlphaHyb, FusedIndex, HybridIndex
from vectorfuse.model import (
    DocRecord,
    SparseVec,
    VectorError,
    l2_normalize,
    sparse_dot,
)

DENSE = 24
VOCAB = 120


def make_doc(rng, doc_id, dense=None, sparse=None):
    if dense is None:
        dense = l2_normalize(rng.normal(size=DENSE)).astype(np.float32)
    if sparse is None:
        nnz = int(rng.integers(1, 9))
        idx = np.sort(rng.choice(VOCAB, size=nnz, replace=False)).astype(np.int32)
        val = rng.uniform(0.1, 2.0, size=nnz).astype(np.float32)
        sparse = SparseVec(idx, val, VOCAB)
    return DocRecord(doc_id, f"title {doc_id}", f"abstract {doc_id}", dense, sparse)


def make_index(rng, n_docs):
    index = HybridIndex(DENSE, VOCAB)
    docs = [make_doc(rng, f"d{i:03d}") for i in range(n_docs)]
    index.upsert(docs)
    return index, docs


def make_query(rng):
    dense_q = l2_normalize(rng.normal(size=DENSE)).astype(np.float32)
    nnz = int(rng.integers(1, 7))
    idx = np.sort(rng.choice(VOCAB, size=nnz, replace=False)).astype(np.int32)
    val = rng.uniform(0.1, 2.0, size=nnz).astype(np.float32)
    return dense_q, SparseVec(idx, val, VOCAB)


def brute_force_scores(docs, dense_q, sparse_q, alpha):
    """Full-scan oracle sharing the index's accumulation shape: one f64
    matrix product for the dense side, a scalar loop for the sparse side."""
    matrix = np.stack([d.dense for d in docs]).astype(np.float64)
    dense_scores = matrix @ dense_q.astype(np.float64)
    sparse_scores = np.array(
        [sparse_dot(sparse_q, d.sparse) for d in docs], dtype=np.float64
    )
    if alpha == 0.0:
        return sparse_scores
    if alpha == 1.0:
        return dense_scores
    return alpha * dense_scores + (1.0 - alpha) * sparse_scores


class TestHybridQuery:
    def test_hand_example_mixed_scores(self):
        """Dense dots (0.9, 0.1) and sparse dots (0.0, 2.0) at alpha 0.5:
        the sparse-heavy document wins, 1.05 against 0.45."""
        index = HybridIndex(2, 10)
        d1 = np.array([0.9, np.sqrt(1 - 0.81)], dtype=np.float32)
        d2 = np.array([0.1, np.sqrt(1 - 0.01)], dtype=np.float32)
        docs = [
            DocRecord("doc1", "", "", d1, SparseVec.from_pairs([(7, 1.0)], vocab_dim=10)),
            DocRecord("doc2", "", "", d2, SparseVec.from_pairs([(5, 2.0)], vocab_dim=10)),
        ]
        index.upsert(docs)
        dense_q = np.array([1.0, 0.0], dtype=np.float32)
        sparse_q = SparseVec.from_pairs([(5, 1.0)], vocab_dim=10)
        ranked = index.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=2)
        assert [h.doc_id for h in ranked.hits] == ["doc2", "doc1"]
        assert ranked.hits[0].score == pytest.approx(1.05, abs=1e-6)
        assert ranked.hits[1].score == pytest.approx(0.45, abs=1e-6)

    def test_matches_brute_force_exactly(self):
        """Scores equal the full-scan convex mix bitwise, and the returned
        ordering equals the oracle's score-then-id ordering."""
        rng = np.random.default_rng(101)
        for trial in range(30):
            n = int(rng.integers(1, 60))
            index, docs = make_index(rng, n)
            dense_q, sparse_q = make_query(rng)
            alpha = float(rng.choice([0.0, 0.25, 0.5, 0.8, 1.0]))
            expected = brute_force_scores(docs, dense_q, sparse_q, alpha)
            by_id = {d.doc_id: s for d, s in zip(docs, expected)}
            order = sorted(by_id, key=lambda did: (-by_id[did], did))
            k = int(rng.integers(1, n + 1))
            ranked = index.query(dense_q, sparse_q, AlphaHyb(alpha), top_k=k)
            assert [h.doc_id for h in ranked.hits] == order[:k]
            for h in ranked.hits:
                assert h.score == by_id[h.doc_id], (trial, h.doc_id)

    def test_alpha_zero_is_sparse_ordering(self):
        rng = np.random.default_rng(7)
        index, docs = make_index(rng, 40)
        dense_q, sparse_q = make_query(rng)
        mixed = index.query(dense_q, sparse_q, AlphaHyb(0.0), top_k=40)
        sparse_only = index.query(None, sparse_q, AlphaHyb(0.0), top_k=40)
        assert [h.doc_id for h in mixed.hits] == [h.doc_id for h in sparse_only.hits]

    def test_alpha_one_is_dense_ordering(self):
        rng = np.random.default_rng(9)
        index, docs = make_index(rng, 40)
        dense_q, sparse_q = make_query(rng)
        mixed = index.query(dense_q, sparse_q, AlphaHyb(1.0), top_k=40)
        dense_only = index.query(dense_q, None, AlphaHyb(1.0), top_k=40)
        assert [h.doc_id for h in mixed.hits] == [h.doc_id for h in dense_only.hits]

    def test_missing_vector_for_alpha(self):
        rng = np.random.default_rng(3)
        index, _ = make_index(rng, 5)
        dense_q, sparse_q = make_query(rng)
        with pytest.raises(VectorError):
            index.query(None, sparse_q, AlphaHyb(0.5), top_k=3)
        with pytest.raises(VectorError):
            index.query(dense_q, None, AlphaHyb(0.5), top_k=3)

    def test_empty_index_returns_empty(self):
        index = HybridIndex(DENSE, VOCAB)
        rng = np.random.default_rng(1)
        dense_q, sparse_q = make_query(rng)
        ranked = index.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=5)
        assert ranked.hits == []

    def test_top_k_beyond_size_returns_all(self):
        rng = np.random.default_rng(2)
        index, docs = make_index(rng, 4)
        dense_q, sparse_q = make_query(rng)
        ranked = index.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=100)
        assert len(ranked.hits) == 4
        assert [h.rank for h in ranked.hits] == [1, 2, 3, 4]

    def test_top_k_zero_rejected(self):
        rng = np.random.default_rng(2)
        index, _ = make_index(rng, 4)
        dense_q, sparse_q = make_query(rng)
        with pytest.raises(VectorError):
            index.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=0)

    def test_deterministic_repeat(self):
        rng = np.random.default_rng(77)
        index, _ = make_index(rng, 30)
        dense_q, sparse_q = make_query(rng)
        a = index.query(dense_q, sparse_q, AlphaHyb(0.6), top_k=10)
        b = index.query(dense_q, sparse_q, AlphaHyb(0.6), top_k=10)
        assert a.hits == b.hits

    def test_query_count_increments(self):
        rng = np.random.default_rng(4)
        index, _ = make_index(rng, 5)
        dense_q, sparse_q = make_query(rng)
        assert index.query_count == 0
        index.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=2)
        index.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=2)
        assert index.query_count == 2

    def test_monotone_in_dense_similarity(self):
        """Moving a document's dense vector toward the query at alpha > 0
        never pushes it down the ranking."""
        rng = np.random.default_rng(55)
        for _ in range(20):
            index, docs = make_index(rng, 25)
            dense_q, sparse_q = make_query(rng)
            target = docs[int(rng.integers(0, len(docs)))]
            before = index.query(dense_q, sparse_q, AlphaHyb(0.7), top_k=25)
            rank_before = next(h.rank for h in before.hits if h.doc_id == target.doc_id)
            t = float(rng.uniform(0.2, 0.9))
            moved = l2_normalize(
                (1 - t) * target.dense.astype(np.float64) + t * dense_q.astype(np.float64)
            ).astype(np.float32)
            index.upsert([DocRecord(target.doc_id, "", "", moved, target.sparse)])
            after = index.query(dense_q, sparse_q, AlphaHyb(0.7), top_k=25)
            rank_after = next(h.rank for h in after.hits if h.doc_id == target.doc_id)
            assert rank_after <= rank_before


class TestUpsert:
    def test_counts_batch(self):
        rng = np.random.default_rng(6)
        index = HybridIndex(DENSE, VOCAB)
        docs = [make_doc(rng, f"d{i:03d}") for i in range(100)]
        assert index.upsert(docs) == 100
        assert len(index) == 100

    def test_reupsert_replaces(self):
        rng = np.random.default_rng(8)
        index, docs = make_index(rng, 3)
        replacement = make_doc(rng, docs[0].doc_id)
        assert index.upsert([replacement]) == 1
        assert len(index) == 3
        found, missing = index.fetch([docs[0].doc_id])
        np.testing.assert_array_equal(found[docs[0].doc_id], replacement.dense)

    def test_bad_vector_rejects_whole_batch(self):
        rng = np.random.default_rng(12)
        index = HybridIndex(DENSE, VOCAB)
        good = make_doc(rng, "good-1")
        bad = DocRecord(
            "bad-1", "", "",
            np.full(DENSE, 0.5, dtype=np.float32),
            SparseVec.from_pairs([(1, 1.0)], vocab_dim=VOCAB),
        )
        with pytest.raises(VectorError) as exc:
            index.upsert([good, bad])
        assert "bad-1" in str(exc.value)
        assert len(index) == 0

    def test_empty_batch_rejected(self):
        index = HybridIndex(DENSE, VOCAB)
        with pytest.raises(VectorError):
            index.upsert([])


class TestPostingsTranspose:
    def test_reconstruction_equals_stored(self):
        """Transposing the inverted postings back gives every stored
        sparse vector with exact index and value equality."""
        rng = np.random.default_rng(17)
        index, docs = make_index(rng, 50)
        replacement = make_doc(rng, docs[5].doc_id)
        index.upsert([replacement])
        postings = index._ensure_postings()
        rebuilt: dict[int, list[tuple[int, float]]] = {}
        for term, (positions, values) in postings.items():
            for pos, val in zip(positions.tolist(), values.tolist()):
                rebuilt.setdefault(pos, []).append((term, val))
        expected = {d.doc_id: d.sparse for d in docs}
        expected[replacement.doc_id] = replacement.sparse
        assert len(rebuilt) == len(expected)
        for doc_id, sparse in expected.items():
            got = index.sparse_vector(doc_id)
            np.testing.assert_array_equal(got.indices, sparse.indices)
            np.testing.assert_array_equal(got.values, sparse.values)
            pos = index._pos[doc_id]
            pairs = sorted(rebuilt.get(pos, []))
            assert [p[0] for p in pairs] == sparse.indices.tolist()
            np.testing.assert_array_equal(
                np.array([p[1] for p in pairs], dtype=np.float32), sparse.values
            )


class TestFetch:
    def test_found_and_missing(self):
        rng = np.random.default_rng(20)
        index, docs = make_index(rng, 3)
        found, missing = index.fetch([docs[0].doc_id, "nope", docs[2].doc_id])
        assert set(found) == {docs[0].doc_id, docs[2].doc_id}
        assert missing == ["nope"]

    def test_empty_request(self):
        rng = np.random.default_rng(20)
        index, _ = make_index(rng, 3)
        found, missing = index.fetch([])
        assert found == {} and missing == []


class TestSnapshot:
    def test_round_trip_preserves_queries_and_digest(self, tmp_path):
        rng = np.random.default_rng(33)
        index, docs = make_index(rng, 40)
        path = tmp_path / "hybrid.idx"
        index.save(path)
        loaded = HybridIndex.load(path)
        assert loaded.content_digest() == index.content_digest()
        assert len(loaded) == len(index)
        dense_q, sparse_q = make_query(rng)
        a = index.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=10)
        b = loaded.query(dense_q, sparse_q, AlphaHyb(0.5), top_k=10)
        assert a.hits == b.hits

    def test_metadata_round_trip(self, tmp_path):
        rng = np.random.default_rng(34)
        index = HybridIndex(DENSE, VOCAB, metadata={"projection_seed": 5, "encoder": "toy"})
        index.upsert([make_doc(rng, "d1")])
        path = tmp_path / "hybrid.idx"
        index.save(path)
        loaded = HybridIndex.load(path)
        assert loaded.metadata == {"projection_seed": 5, "encoder": "toy"}

    def test_digest_tracks_content(self, tmp_path):
        rng = np.random.default_rng(35)
        index, docs = make_index(rng, 5)
        before = index.content_digest()
        index.upsert([make_doc(rng, "extra")])
        assert index.content_digest() != before


class TestFusedIndex:
    def test_self_retrieval(self):
        rng = np.random.default_rng(40)
        index = FusedIndex(DENSE)
        v = l2_normalize(rng.normal(size=DENSE)).astype(np.float32)
        doc = make_doc(rng, "self")
        doc.fused = v
        other = make_doc(rng, "other")
        other.fused = l2_normalize(rng.normal(size=DENSE)).astype(np.float32)
        index.upsert([doc, other])
        ranked = index.query(v, top_k=1)
        assert ranked.hits[0].doc_id == "self"
        assert ranked.hits[0].score == pytest.approx(1.0, abs=1e-6)

    def test_hand_ordering(self):
        """Three documents with dots (0.2, 0.8, 0.5): top 2 are the second
        then the third."""
        index = FusedIndex(2)
        q = np.array([1.0, 0.0], dtype=np.float32)
        for doc_id, x in [("doc1", 0.2), ("doc2", 0.8), ("doc3", 0.5)]:
            fused = np.array([x, np.sqrt(1 - x * x)], dtype=np.float32)
            doc = DocRecord(doc_id, "", "", fused, SparseVec.empty(1), fused=fused)
            index.upsert([doc])
        ranked = index.query(q, top_k=2)
        assert [h.doc_id for h in ranked.hits] == ["doc2", "doc3"]

    def test_dimension_mismatch(self):
        index = FusedIndex(4)
        with pytest.raises(VectorError):
            index.query(np.zeros(3, dtype=np.float32), top_k=1)

    def test_empty_index(self):
        index = FusedIndex(4)
        ranked = index.query(
            l2_normalize(np.ones(4)).astype(np.float32), top_k=3
        )
        assert ranked.hits == []

    def test_missing_fused_rejected(self):
        rng = np.random.default_rng(44)
        index = FusedIndex(DENSE)
        doc = make_doc(rng, "nofuse")
        with pytest.raises(VectorError):
            index.upsert([doc])

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(46)
        index = FusedIndex(DENSE)
        docs = []
        for i in range(10):
            doc = make_doc(rng, f"d{i:02d}")
            doc.fused = l2_normalize(rng.normal(size=DENSE)).astype(np.float32)
            docs.append(doc)
        index.upsert(docs)
        path = tmp_path / "fused.idx"
        index.save(path)
        loaded = FusedIndex.load(path)
        assert loaded.content_digest() == index.content_digest()
        q = l2_normalize(rng.normal(size=DENSE)).astype(np.float32)
        assert index.query(q, top_k=5).hits == loaded.query(q, top_k=5).hits


def test_alpha_hyb_range():
    with pytest.raises(VectorError):
        AlphaHyb(-0.01)
    with pytest.raises(VectorError):
        AlphaHyb(1.01)
    assert AlphaHyb(0.5).value == 0.5
