"""Accuracy, latency, probe, and memory measurement for query batches."""

from __future__ import annotations

import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import BoiParams, RankedResult, VectorSet


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Exact nearest neighbors per query: row i holds query i's ids, best first."""

    neighbors: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.neighbors, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError("ground truth must be (num_queries, k) with k >= 1")
        if arr.size and arr.min() < 0:
            raise ValueError("ground-truth ids must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "neighbors", arr)

    @property
    def num_queries(self) -> int:
        return int(self.neighbors.shape[0])

    @property
    def depth(self) -> int:
        return int(self.neighbors.shape[1])

    def true_nn(self, query_index: int) -> int:
        return int(self.neighbors[query_index, 0])

    def relevant(self, query_index: int) -> np.ndarray:
        return self.neighbors[query_index]


def average_precision(ranking: Sequence[int], relevant) -> float:
    """AP of one ranked id list against a non-empty relevant set.

    Precision is sampled at every rank holding a relevant id and averaged
    over |relevant|, so relevant items missing from the ranking count as
    zero-precision hits.
    """
    relevant = np.asarray(list(relevant) if isinstance(relevant, set) else relevant)
    relevant = np.unique(relevant)
    if relevant.size == 0:
        raise ValueError("relevant set must be non-empty")
    ranking = np.asarray(ranking, dtype=np.int64)
    if ranking.size == 0:
        return 0.0
    hits = np.isin(ranking, relevant)
    precision = np.cumsum(hits) / np.arange(1, ranking.size + 1)
    return float((precision * hits).sum() / relevant.size)


def mean_average_precision(
    rankings: Sequence[Sequence[int]], ground_truth: GroundTruth
) -> float:
    """Arithmetic mean of per-query AP; every query needs a ranking."""
    if len(rankings) != ground_truth.num_queries:
        raise ValueError(
            f"{ground_truth.num_queries} queries in ground truth but "
            f"{len(rankings)} rankings supplied"
        )
    if not rankings:
        return 0.0
    return float(
        np.mean(
            [
                average_precision(r, ground_truth.relevant(i))
                for i, r in enumerate(rankings)
            ]
        )
    )


def recall_at(ranking: Sequence[int], true_nn: int, k: int) -> int:
    """1 if the true nearest neighbor appears in the first k entries."""
    if k < 1:
        raise ValueError("k must be >= 1")
    head = np.asarray(ranking, dtype=np.int64)[:k]
    return int(np.any(head == true_nn))


def recall_curve(
    rankings: Sequence[Sequence[int]], ground_truth: GroundTruth, ks: Sequence[int]
) -> dict[int, float]:
    """Mean recall at each cutoff in ``ks`` over all queries."""
    out = {}
    for k in ks:
        vals = [
            recall_at(r, ground_truth.true_nn(i), k)
            for i, r in enumerate(rankings)
        ]
        out[int(k)] = float(np.mean(vals)) if vals else 0.0
    return out


def time_queries(
    run: Callable[[int, np.ndarray], object],
    queries: VectorSet,
    repetitions: int = 1,
    workers: int = 1,
) -> np.ndarray:
    """Wall-clock milliseconds per query, median over ``repetitions``.

    ``run`` is called as run(query_index, vector). One untimed warm-up call
    per query precedes the timed repetitions. With workers > 1 queries are
    dispatched across a thread pool; each query is still timed end to end
    inside its worker.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def _time_one(qi: int) -> float:
        v = queries.vectors[qi]
        run(qi, v)  # warm-up, excluded
        samples = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            run(qi, v)
            samples.append((time.perf_counter() - t0) * 1e3)
        return statistics.median(samples)

    indices = range(queries.n)
    if workers == 1:
        times = [_time_one(qi) for qi in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            times = list(pool.map(_time_one, indices))
    return np.asarray(times, dtype=np.float64)


@dataclass(frozen=True)
class MemoryEstimate:
    """Byte counts for the three resident structures of one configuration."""

    vectors_bytes: int
    index_bytes: int
    accumulator_bytes: int

    @property
    def total_bytes(self) -> int:
        return self.vectors_bytes + self.index_bytes + self.accumulator_bytes

    def to_dict(self) -> dict:
        return {
            "vectors_bytes": self.vectors_bytes,
            "index_bytes": self.index_bytes,
            "accumulator_bytes": self.accumulator_bytes,
            "total_bytes": self.total_bytes,
        }


def estimate_memory(
    n: int,
    dim: int,
    params: BoiParams,
    id_bytes: int = 4,
    weight_bytes: int = 4,
) -> MemoryEstimate:
    """Resident-memory model: raw vectors, bucketed ids, one accumulator.

    vectors = n * dim * 4 (float32), index = n * num_tables * id_bytes,
    accumulator = n * weight_bytes. The 4-byte default for ids is what the
    implementation actually needs to address large sets; id_bytes=1
    reproduces the compact single-byte accounting sometimes quoted for
    256-bucket tables, at the cost of only addressing 256 distinct ids.
    """
    if n < 0 or dim < 0:
        raise ValueError("n and dim must be non-negative")
    if id_bytes < 1 or weight_bytes < 1:
        raise ValueError("byte widths must be >= 1")
    return MemoryEstimate(
        vectors_bytes=n * dim * 4,
        index_bytes=n * params.num_tables * id_bytes,
        accumulator_bytes=n * weight_bytes,
    )


@dataclass
class EvalReport:
    """Aggregated metrics for one method over one query batch."""

    method: str
    num_queries: int
    k: int
    map: float | None
    recall_at_k: dict[int, float]
    mean_query_time_ms: float
    per_query_times_ms: list[float]
    mean_probe_count: float | None
    memory_estimate: MemoryEstimate | None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.map is not None and not 0.0 <= self.map <= 1.0:
            raise ValueError("map must lie in [0, 1]")
        for k, v in self.recall_at_k.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"recall@{k} must lie in [0, 1]")
        if any(t < 0 for t in self.per_query_times_ms):
            raise ValueError("query times must be non-negative")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "method": self.method,
            "num_queries": self.num_queries,
            "k": self.k,
            "map": self.map,
            "recall_at_k": {str(k): v for k, v in sorted(self.recall_at_k.items())},
            "mean_query_time_ms": self.mean_query_time_ms,
            "per_query_times_ms": self.per_query_times_ms,
            "mean_probe_count": self.mean_probe_count,
            "memory_estimate": (
                self.memory_estimate.to_dict() if self.memory_estimate else None
            ),
            **self.extra,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def run_benchmark(
    run: Callable[[int, np.ndarray], RankedResult],
    queries: VectorSet,
    ground_truth: GroundTruth | None = None,
    *,
    k: int,
    repetitions: int = 1,
    workers: int = 1,
    method: str = "",
    memory: MemoryEstimate | None = None,
    extra: dict | None = None,
) -> tuple[EvalReport, list[RankedResult]]:
    """Run one method over a query batch and aggregate its metrics.

    A first untimed pass collects the rankings used for accuracy; timing
    then re-runs each query per ``time_queries`` semantics. Returns the
    report plus the per-query results for CSV export.
    """
    if ground_truth is not None and ground_truth.num_queries != queries.n:
        raise ValueError(
            f"{queries.n} queries but ground truth covers "
            f"{ground_truth.num_queries}"
        )

    def _collect(qi: int) -> RankedResult:
        return run(qi, queries.vectors[qi])

    if workers == 1:
        results = [_collect(qi) for qi in range(queries.n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_collect, range(queries.n)))

    rankings = [r.ids for r in results]
    map_score = (
        mean_average_precision(rankings, ground_truth)
        if ground_truth is not None and queries.n
        else None
    )
    ks = sorted({c for c in (1, 10, 100, k) if 1 <= c <= k})
    recalls = (
        recall_curve(rankings, ground_truth, ks)
        if ground_truth is not None and queries.n
        else {}
    )
    times = time_queries(run, queries, repetitions=repetitions, workers=workers)
    probe_counts = [r.probe_count for r in results if r.probe_count is not None]
    report = EvalReport(
        method=method,
        num_queries=queries.n,
        k=k,
        map=map_score,
        recall_at_k=recalls,
        mean_query_time_ms=float(times.mean()) if times.size else 0.0,
        per_query_times_ms=[float(t) for t in times],
        mean_probe_count=float(np.mean(probe_counts)) if probe_counts else None,
        memory_estimate=memory,
        extra=extra or {},
    )
    return report, results
