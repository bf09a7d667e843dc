"""Core value types shared by every other module: vectors, parameters, results.

Descriptors are stored as float32 rows; all distance arithmetic accumulates
in float64 so that result orderings are stable across the exact and
approximate search paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEDULE_KINDS = ("fixed", "linear", "sublinear")

MAX_HASH_BITS = 30


def dense_vector(values) -> np.ndarray:
    """Coerce ``values`` to a finite float32 descriptor vector.

    Raises ValueError for empty, non-1-D, or non-finite input.
    """
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1:
        raise ValueError(f"descriptor must be 1-D, got shape {vec.shape}")
    if vec.size == 0:
        raise ValueError("descriptor must have at least one component")
    if not np.all(np.isfinite(vec)):
        raise ValueError("descriptor components must be finite")
    return vec


@dataclass(frozen=True, eq=False)
class VectorSet:
    """An ordered, immutable collection of same-dimension float32 descriptors.

    Record ids are the row positions 0..n-1. The backing array is marked
    read-only, so a populated set is safe to share across threads.
    """

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.vectors, dtype=np.float32))
        if arr.ndim != 2:
            raise ValueError(f"vector set must have shape (n, dim), got {arr.shape}")
        if arr.shape[0] > 0 and arr.shape[1] == 0:
            raise ValueError("vectors must have at least one component")
        if not np.all(np.isfinite(arr)):
            raise ValueError("vector components must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)
        object.__setattr__(self, "_doubles", None)

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return self.n

    def doubles(self) -> np.ndarray:
        """Read-only float64 copy of the data, cached on first use."""
        if self._doubles is None:
            d = self.vectors.astype(np.float64)
            d.setflags(write=False)
            object.__setattr__(self, "_doubles", d)
        return self._doubles


@dataclass(frozen=True)
class BoiParams:
    """Tuning parameters for the weighted multi-probe index.

    Defaults follow the reference configuration: 100 tables of 2**8 buckets,
    probing 10 neighbor buckets per table under a sublinear decay, a probe
    radius of 1, and a 250-element shortlist re-ranked by exact distance.

    ``strict_radius`` caps probing at the Hamming ball of ``probe_radius``;
    by default the probe budget may spill into farther buckets, which then
    contribute with their true distance weight (see the index module).
    """

    num_tables: int = 100
    hash_bits: int = 8
    probe_radius: int = 1
    shortlist_size: int = 250
    initial_probe_count: int = 10
    schedule: str = "sublinear"
    linear_step: int = 40
    sublinear_step: int = 25
    seed: int = 0
    strict_radius: bool = False

    def __post_init__(self):
        if self.num_tables < 1:
            raise ValueError("num_tables must be >= 1")
        if not 1 <= self.hash_bits <= MAX_HASH_BITS:
            raise ValueError(f"hash_bits must be in [1, {MAX_HASH_BITS}]")
        if self.probe_radius < 0:
            raise ValueError("probe_radius must be >= 0")
        if self.shortlist_size < 1:
            raise ValueError("shortlist_size must be >= 1")
        if not 0 <= self.initial_probe_count <= self.num_buckets - 1:
            raise ValueError(
                "initial_probe_count must be in [0, 2**hash_bits - 1]"
            )
        if self.schedule not in SCHEDULE_KINDS:
            raise ValueError(f"schedule must be one of {SCHEDULE_KINDS}")
        if self.linear_step < 1 or self.sublinear_step < 1:
            raise ValueError("schedule steps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def num_buckets(self) -> int:
        return 1 << self.hash_bits


@dataclass(frozen=True, eq=False)
class RankedResult:
    """Record ids ranked by non-decreasing distance to a query.

    ``probe_count`` and ``shortlist_size`` carry per-query instrumentation
    when the result came from a bucketed method; they stay None otherwise.
    """

    ids: np.ndarray
    distances: np.ndarray
    probe_count: int | None = None
    shortlist_size: int | None = None

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        dist = np.asarray(self.distances, dtype=np.float64)
        if ids.ndim != 1 or dist.ndim != 1 or ids.shape != dist.shape:
            raise ValueError("ids and distances must be 1-D and equal length")
        if dist.size:
            if not np.all(np.isfinite(dist)) or dist[0] < 0:
                raise ValueError("distances must be finite and non-negative")
            if np.any(np.diff(dist) < 0):
                raise ValueError("distances must be non-decreasing")
            if np.unique(ids).size != ids.size:
                raise ValueError("record ids must be distinct")
        ids.setflags(write=False)
        dist.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "distances", dist)

    @classmethod
    def empty(cls, probe_count=None, shortlist_size=None) -> "RankedResult":
        return cls(
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.float64),
            probe_count=probe_count,
            shortlist_size=shortlist_size,
        )

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(d)) for i, d in zip(self.ids, self.distances)]

    def __len__(self) -> int:
        return int(self.ids.size)


def pairwise_distances(rows: np.ndarray, query) -> np.ndarray:
    """Euclidean distance from ``query`` to every row of ``rows``.

    Inputs are cast to float64 before subtraction, so the result does not
    depend on which records were gathered or on the caller's batch size.
    Finiteness is the caller's responsibility (hot path).
    """
    r = np.asarray(rows, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    if r.ndim != 2 or q.ndim != 1 or r.shape[1] != q.shape[0]:
        raise ValueError(
            f"dimension mismatch: rows {r.shape} vs query {q.shape}"
        )
    diff = r - q
    sq = np.einsum("ij,ij->i", diff, diff)
    return np.sqrt(sq, out=sq)


def l2_distance(a, b) -> float:
    """Euclidean distance between two descriptors.

    Symmetric, zero exactly when the inputs are equal; raises ValueError on
    dimension mismatch or non-finite input.
    """
    va = dense_vector(a)
    vb = dense_vector(b)
    if va.shape != vb.shape:
        raise ValueError(
            f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}"
        )
    return float(pairwise_distances(va[np.newaxis, :], vb)[0])


def rank_by_distance(ids, distances, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Select the k entries with smallest distance, ties by ascending id.

    The tie rule is exact: entries sharing the k-th smallest distance are
    resolved by id before truncation, so the output is a deterministic
    function of (ids, distances, k).
    """
    ids = np.asarray(ids, dtype=np.int64)
    distances = np.asarray(distances, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if ids.size > k:
        kth = np.partition(distances, k - 1)[k - 1]
        keep = distances <= kth
        ids = ids[keep]
        distances = distances[keep]
    order = np.lexsort((ids, distances))[:k]
    return ids[order], distances[order]
