"""Retrieval quality metrics, latency summaries, and TREC-style file I/O.

Graded judgments use the trec_eval conventions: linear gain nDCG by
default (exponential gain behind a flag), the ideal DCG computed from all
judged documents for the query truncated to the cutoff, and a document
counting as relevant for the binary metrics when its grade is at least 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import Hit, RankedList, VectorError

RELEVANT_GRADE = 1

Qrels = dict[str, dict[str, int]]


def dcg_at_k(gains: Sequence[float], k: int) -> float:
    """Discounted cumulative gain over the first k gain values."""
    total = 0.0
    for i, g in enumerate(gains[:k], start=1):
        total += g / math.log2(i + 1)
    return total


def _gain(grade: int, exponential: bool) -> float:
    return float(2**grade - 1) if exponential else float(grade)


def ndcg_at_k(
    ranking: Sequence[str],
    judgments: Mapping[str, int],
    k: int,
    exponential: bool = False,
) -> float:
    """Normalised DCG at cutoff k against graded judgments.

    The ideal ordering ranks every judged document by grade, so a run is
    scored against the best achievable list, not merely a reordering of
    what it returned. Returns 0.0 when nothing judged is relevant.
    """
    gains = [_gain(judgments.get(doc_id, 0), exponential) for doc_id in ranking]
    ideal = sorted((_gain(g, exponential) for g in judgments.values()), reverse=True)
    idcg = dcg_at_k(ideal, k)
    if idcg == 0.0:
        return 0.0
    return dcg_at_k(gains, k) / idcg


def precision_at_k(ranking: Sequence[str], judgments: Mapping[str, int], k: int) -> float:
    hits = sum(1 for d in ranking[:k] if judgments.get(d, 0) >= RELEVANT_GRADE)
    return hits / k


def mrr_at_k(ranking: Sequence[str], judgments: Mapping[str, int], k: int) -> float:
    for i, doc_id in enumerate(ranking[:k], start=1):
        if judgments.get(doc_id, 0) >= RELEVANT_GRADE:
            return 1.0 / i
    return 0.0


def average_precision_at_k(
    ranking: Sequence[str], judgments: Mapping[str, int], k: int
) -> float:
    """AP@k normalised by min(R, k) so a perfect prefix scores 1.0."""
    relevant_total = sum(1 for g in judgments.values() if g >= RELEVANT_GRADE)
    if relevant_total == 0:
        return 0.0
    seen = 0
    total = 0.0
    for i, doc_id in enumerate(ranking[:k], start=1):
        if judgments.get(doc_id, 0) >= RELEVANT_GRADE:
            seen += 1
            total += seen / i
    return total / min(relevant_total, k)


def hit_rate_at_k(ranking: Sequence[str], judgments: Mapping[str, int], k: int) -> float:
    for doc_id in ranking[:k]:
        if judgments.get(doc_id, 0) >= RELEVANT_GRADE:
            return 1.0
    return 0.0


@dataclass
class LatencyStats:
    """Mean and tail latency over a batch of per-query timings."""

    count: int
    avg_ms: float
    p95_ms: float

    def to_dict(self) -> dict:
        return {"count": self.count, "avg_ms": self.avg_ms, "p95_ms": self.p95_ms}


def latency_stats(samples_ms: Sequence[float]) -> LatencyStats:
    """Nearest-rank p95: the ceil(0.95 n)-th smallest sample, 1-indexed."""
    if not samples_ms:
        raise VectorError("latency_stats needs at least one sample")
    if any(s < 0 for s in samples_ms):
        raise VectorError("latency samples must be non-negative")
    ordered = sorted(samples_ms)
    rank = math.ceil(0.95 * len(ordered))
    return LatencyStats(
        count=len(ordered),
        avg_ms=sum(ordered) / len(ordered),
        p95_ms=ordered[rank - 1],
    )


@dataclass
class MetricReport:
    """Aggregated evaluation output for one run over one qrels set.

    means holds the metric name -> mean over evaluated queries;
    per_query holds query_id -> {metric: value}. Queries that could not
    be scored are listed in skipped with a reason and excluded from the
    means.
    """

    k: int
    evaluated: int
    skipped: dict[str, str] = field(default_factory=dict)
    means: dict[str, float] = field(default_factory=dict)
    per_query: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "evaluated": self.evaluated,
            "skipped": dict(self.skipped),
            "means": dict(self.means),
            "per_query": {q: dict(m) for q, m in self.per_query.items()},
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def to_text(self) -> str:
        names = sorted(self.means)
        lines = []
        header = f"{'query_id':<16}" + "".join(f"{n:>14}" for n in names)
        lines.append(header)
        for qid in sorted(self.per_query):
            row = self.per_query[qid]
            lines.append(
                f"{qid:<16}" + "".join(f"{row.get(n, 0.0):>14.4f}" for n in names)
            )
        lines.append(f"{'mean':<16}" + "".join(f"{self.means[n]:>14.4f}" for n in names))
        lines.append(f"evaluated queries: {self.evaluated}")
        if self.skipped:
            lines.append(f"skipped queries:   {len(self.skipped)}")
            for qid, reason in sorted(self.skipped.items()):
                lines.append(f"  {qid}: {reason}")
        return "\n".join(lines)


def evaluate_run(
    run: Mapping[str, RankedList],
    qrels: Qrels,
    k: int = 10,
    exponential_gain: bool = False,
    doc_vectors: Mapping[str, "object"] | None = None,
) -> MetricReport:
    """Score a run against judgments, averaging over scorable queries.

    A query is skipped (and excluded from every mean) when it has no
    judgments at all or none of its judged documents reaches the relevance
    threshold. When doc_vectors is given, intra-list diversity at k is
    added using each result list's document vectors.
    """
    from .fusion import ild_at_k

    if k < 1:
        raise VectorError(f"k must be >= 1, got {k}")
    if not run:
        raise VectorError("run is empty; nothing to evaluate")
    report = MetricReport(k=k, evaluated=0)
    sums: dict[str, float] = {}
    for query_id in sorted(run):
        ranked = run[query_id]
        judgments = qrels.get(query_id)
        if not judgments:
            report.skipped[query_id] = "no judgments"
            continue
        if all(g < RELEVANT_GRADE for g in judgments.values()):
            report.skipped[query_id] = "no relevant documents judged"
            continue
        ranking = ranked.doc_ids()
        row = {
            f"ndcg@{k}": ndcg_at_k(ranking, judgments, k, exponential_gain),
            f"precision@{k}": precision_at_k(ranking, judgments, k),
            f"mrr@{k}": mrr_at_k(ranking, judgments, k),
            f"map@{k}": average_precision_at_k(ranking, judgments, k),
            f"hit_rate@{k}": hit_rate_at_k(ranking, judgments, k),
        }
        if doc_vectors is not None:
            vecs = [doc_vectors[d] for d in ranking[:k] if d in doc_vectors]
            row[f"ild@{k}"] = ild_at_k(vecs, k)
        report.per_query[query_id] = row
        report.evaluated += 1
        for name, value in row.items():
            sums[name] = sums.get(name, 0.0) + value
    if not report.evaluated:
        raise VectorError(
            "no evaluable queries: "
            + "; ".join(f"{q}: {r}" for q, r in sorted(report.skipped.items())[:5])
        )
    report.means = {name: value / report.evaluated for name, value in sums.items()}
    return report


def read_qrels(path: str | Path) -> Qrels:
    """Parse TREC qrels lines: query_id iteration doc_id grade."""
    qrels: Qrels = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise VectorError(
                    f"{path}:{lineno}: expected 4 fields, got {len(parts)}"
                )
            query_id, _, doc_id, grade = parts
            try:
                grade_val = int(grade)
            except ValueError:
                raise VectorError(f"{path}:{lineno}: grade {grade!r} is not an integer")
            if grade_val < 0:
                raise VectorError(f"{path}:{lineno}: grade must be >= 0, got {grade_val}")
            per_query = qrels.setdefault(query_id, {})
            if doc_id in per_query:
                raise VectorError(
                    f"{path}:{lineno}: duplicate judgment for ({query_id}, {doc_id})"
                )
            per_query[doc_id] = grade_val
    return qrels


def read_run(path: str | Path) -> dict[str, RankedList]:
    """Parse TREC run lines: query_id Q0 doc_id rank score tag."""
    per_query: dict[str, list[tuple[int, str, float]]] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise VectorError(
                    f"{path}:{lineno}: expected 6 fields, got {len(parts)}"
                )
            query_id, _, doc_id, rank, score, _tag = parts
            try:
                rank_val = int(rank)
                score_val = float(score)
            except ValueError:
                raise VectorError(f"{path}:{lineno}: bad rank/score {rank!r} {score!r}")
            per_query.setdefault(query_id, []).append((rank_val, doc_id, score_val))
    run: dict[str, RankedList] = {}
    for query_id, rows in per_query.items():
        rows.sort()
        seen: set[str] = set()
        hits = []
        for position, (rank, doc_id, score) in enumerate(rows, start=1):
            if rank != position:
                raise VectorError(
                    f"{path}: query {query_id!r} ranks are not contiguous from 1"
                )
            if doc_id in seen:
                raise VectorError(f"{path}: query {query_id!r} repeats doc {doc_id!r}")
            seen.add(doc_id)
            hits.append(Hit(doc_id, score, rank))
        run[query_id] = RankedList(query_id=query_id, hits=hits)
    return run


def write_run(
    run: Mapping[str, RankedList], path: str | Path, tag: str = "vectorfuse"
) -> None:
    """Write a run in TREC format with scores fixed to six decimals."""
    with open(path, "w") as fh:
        for query_id in sorted(run):
            for hit in run[query_id].hits:
                fh.write(
                    f"{query_id} Q0 {hit.doc_id} {hit.rank} {hit.score:.6f} {tag}\n"
                )
