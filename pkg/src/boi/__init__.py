"""Approximate nearest-neighbor search by weighted multi-probe voting.

Records are hashed into L sign-projection tables. A query accumulates
per-record votes from its bucket and nearby buckets in every table, keeps
the highest-weight shortlist, and re-ranks it by exact Euclidean distance.
Plain LSH, Hamming-ball multi-probe LSH, and a brute-force oracle ship
alongside for comparison, plus an evaluation harness and binary dataset IO.
"""

from .baselines import brute_force_query, lsh_query, multiprobe_lsh_query
from .core import (
    BoiParams,
    RankedResult,
    VectorSet,
    dense_vector,
    l2_distance,
    pairwise_distances,
)
from .data_io import (
    FormatError,
    load_index,
    read_fvecs,
    read_ivecs,
    save_index,
    write_fvecs,
    write_ivecs,
)
from .evaluate import (
    EvalReport,
    GroundTruth,
    MemoryEstimate,
    average_precision,
    estimate_memory,
    mean_average_precision,
    recall_at,
    recall_curve,
    run_benchmark,
    time_queries,
)
from .hashing import (
    ProjectionTable,
    hash_vector,
    insert_all,
    make_tables,
    neighbor_codes,
)
from .index import (
    BoiIndex,
    ProbeSchedule,
    accumulate,
    build_index,
    build_schedule,
    expected_probes,
    query,
    shortlist,
    weight,
)
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BoiIndex",
    "BoiParams",
    "EvalReport",
    "FormatError",
    "GroundTruth",
    "MemoryEstimate",
    "ProbeSchedule",
    "ProjectionTable",
    "RankedResult",
    "SynthSpec",
    "VectorSet",
    "accumulate",
    "average_precision",
    "brute_force_query",
    "build_index",
    "build_schedule",
    "dense_vector",
    "estimate_memory",
    "expected_probes",
    "generate",
    "hash_vector",
    "insert_all",
    "l2_distance",
    "load_index",
    "lsh_query",
    "make_tables",
    "mean_average_precision",
    "multiprobe_lsh_query",
    "neighbor_codes",
    "pairwise_distances",
    "query",
    "read_fvecs",
    "read_ivecs",
    "recall_at",
    "recall_curve",
    "run_benchmark",
    "save_index",
    "shortlist",
    "time_queries",
    "weight",
    "write_fvecs",
    "write_ivecs",
    "__version__",
]
