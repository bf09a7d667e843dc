"""Command-line interface: generate data, build indexes, query, benchmark."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import brute_force_query, lsh_query, multiprobe_lsh_query
from .core import SCHEDULE_KINDS, BoiParams, VectorSet
from .data_io import (
    load_index,
    read_fvecs,
    read_ivecs,
    save_index,
    write_fvecs,
    write_ivecs,
)
from .evaluate import (
    GroundTruth,
    average_precision,
    estimate_memory,
    mean_average_precision,
    recall_at,
    recall_curve,
    run_benchmark,
)
from .hashing import occupancy_summary
from .index import BoiIndex, build_index, query as boi_query
from .synth import SynthSpec, generate

log = logging.getLogger("boi")

METHODS = ("boi", "boi_strict", "lsh", "multiprobe", "brute")

_DEFAULTS = BoiParams()


def _add_param_flags(p: argparse.ArgumentParser, for_build: bool) -> None:
    """Index parameters. On build they take defaults; elsewhere they are
    overrides applied on top of the loaded snapshot."""

    def default(v):
        return v if for_build else None

    p.add_argument("--L", type=int, default=default(_DEFAULTS.num_tables),
                   help="number of hash tables")
    p.add_argument("--bits", type=int, default=default(_DEFAULTS.hash_bits),
                   help="bits per bucket code (2**bits buckets)")
    p.add_argument("--l", type=int, default=default(_DEFAULTS.probe_radius),
                   help="probe radius in Hamming distance")
    p.add_argument("--epsilon", type=int, default=default(_DEFAULTS.shortlist_size),
                   help="shortlist size re-ranked by exact distance")
    p.add_argument("--gamma0", type=int, default=default(_DEFAULTS.initial_probe_count),
                   help="initial neighbor buckets probed per table")
    p.add_argument("--schedule", choices=SCHEDULE_KINDS,
                   default=default(_DEFAULTS.schedule),
                   help="probe-count reduction rule")
    p.add_argument("--delta1", type=int, default=default(_DEFAULTS.linear_step),
                   help="tables between reductions (linear schedule)")
    p.add_argument("--delta2", type=int, default=default(_DEFAULTS.sublinear_step),
                   help="tables between reductions (sublinear schedule)")
    p.add_argument("--seed", type=int, default=default(_DEFAULTS.seed),
                   help="RNG seed for projections and probe shuffles")


def _params_from_flags(args) -> BoiParams:
    return BoiParams(
        num_tables=args.L,
        hash_bits=args.bits,
        probe_radius=args.l,
        shortlist_size=args.epsilon,
        initial_probe_count=args.gamma0,
        schedule=args.schedule,
        linear_step=args.delta1,
        sublinear_step=args.delta2,
        seed=args.seed,
    )


def _apply_overrides(params: BoiParams, args, strict: bool) -> BoiParams:
    """Probe-time parameters may change after build; structural ones may not."""
    for flag, field_name in (("L", "num_tables"), ("bits", "hash_bits"),
                             ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None and value != getattr(params, field_name):
            raise SystemExit(
                f"--{flag} is baked into the snapshot "
                f"({getattr(params, field_name)}); rebuild to change it"
            )
    updates = {"strict_radius": strict}
    for flag, field_name in (
        ("l", "probe_radius"),
        ("epsilon", "shortlist_size"),
        ("gamma0", "initial_probe_count"),
        ("schedule", "schedule"),
        ("delta1", "linear_step"),
        ("delta2", "sublinear_step"),
    ):
        value = getattr(args, flag)
        if value is not None:
            updates[field_name] = value
    return dataclasses.replace(params, **updates)


def _make_runner(method: str, index: BoiIndex | None, dataset: VectorSet, k: int):
    if method == "brute":
        return lambda qi, v: brute_force_query(dataset, v, k)
    if index is None:
        raise SystemExit(f"method {method} requires --index")
    if method in ("boi", "boi_strict"):
        return lambda qi, v: boi_query(index, v, k, query_index=qi)
    params = index.params
    if method == "lsh":
        return lambda qi, v: lsh_query(
            index.tables, dataset, v, params.shortlist_size, k
        )
    if method == "multiprobe":
        return lambda qi, v: multiprobe_lsh_query(
            index.tables, dataset, v, params.probe_radius,
            params.shortlist_size, k,
        )
    raise SystemExit(f"unknown method {method}")


def cmd_gen(args) -> int:
    out = Path(args.out)
    if not out.is_dir():
        raise SystemExit(f"output directory {out} does not exist")
    spec = SynthSpec(
        n=args.n,
        dim=args.dim,
        num_clusters=args.clusters,
        cluster_std=args.cluster_std,
        num_queries=args.num_queries,
        seed=args.seed,
        gt_k=args.gt_k,
        query_jitter=args.query_jitter,
    )
    database, queries, gt = generate(spec)
    write_fvecs(out / "base.fvecs", database)
    write_fvecs(out / "queries.fvecs", queries)
    write_ivecs(out / "groundtruth.ivecs", gt.neighbors)
    log.info(
        "wrote %d base vectors, %d queries, ground truth depth %d to %s",
        database.n, queries.n, gt.depth, out,
    )
    return 0


def cmd_build(args) -> int:
    dataset = read_fvecs(args.dataset)
    params = _params_from_flags(args)
    index = build_index(dataset, params)
    save_index(index, args.index)
    stats = occupancy_summary(index.tables)
    log.info(
        "built %d tables x %d buckets over %d records: occupancy "
        "min=%d mean=%.1f max=%d empty=%.1f%%",
        stats["num_tables"], stats["buckets_per_table"], dataset.n,
        stats["min"], stats["mean"], stats["max"],
        100.0 * stats["empty_fraction"],
    )
    log.info(
        "occupancy histogram (buckets per size band): %s",
        " ".join(f"{band}:{count}" for band, count in stats["histogram"].items()),
    )
    log.info("snapshot written to %s", args.index)
    return 0


def _load_for_query(args, strict: bool):
    dataset = read_fvecs(args.dataset)
    index = None
    if args.index:
        index = load_index(args.index, dataset)
        index = BoiIndex(
            _apply_overrides(index.params, args, strict),
            index.dim,
            index.tables,
            dataset,
        )
    return dataset, index


def cmd_query(args) -> int:
    strict = args.method == "boi_strict"
    dataset, index = _load_for_query(args, strict)
    queries = read_fvecs(args.queries)
    run = _make_runner(args.method, index, dataset, args.k)
    rows = np.full((queries.n, args.k), -1, dtype=np.int32)
    for qi in range(queries.n):
        result = run(qi, queries.vectors[qi])
        rows[qi, : len(result)] = result.ids[: args.k]
        if not args.out:
            head = ", ".join(
                f"{rid}:{dist:.6g}" for rid, dist in result.entries[:5]
            )
            print(f"query {qi}: {head}")
    if args.out:
        write_ivecs(args.out, rows)
        log.info("wrote %d result rows (k=%d) to %s", queries.n, args.k, args.out)
    return 0


def cmd_bench(args) -> int:
    strict = args.method == "boi_strict"
    dataset, index = _load_for_query(args, strict)
    queries = read_fvecs(args.queries)
    gt = GroundTruth(read_ivecs(args.groundtruth)) if args.groundtruth else None
    run = _make_runner(args.method, index, dataset, args.k)
    params = index.params if index is not None else _DEFAULTS
    memory = estimate_memory(dataset.n, dataset.dim, params)
    report, results = run_benchmark(
        run,
        queries,
        gt,
        k=args.k,
        repetitions=args.repetitions,
        workers=args.workers,
        method=args.method,
        memory=memory,
        extra={
            "dataset": {"n": dataset.n, "dim": dataset.dim},
            "params": dataclasses.asdict(params) if index is not None else None,
        },
    )
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
        log.info("report written to %s", args.out)
    else:
        print(text)
    if args.csv:
        _write_per_query_csv(args.csv, report, results, gt)
        log.info("per-query rows written to %s", args.csv)
    log.info(
        "method=%s mAP=%s recall=%s mean_time=%.3fms",
        args.method,
        f"{report.map:.4f}" if report.map is not None else "n/a",
        {k: round(v, 4) for k, v in report.recall_at_k.items()},
        report.mean_query_time_ms,
    )
    return 0


def _write_per_query_csv(path, report, results, gt) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "query_index", "time_ms", "probe_count", "shortlist_size",
                "num_results", "ap", "recall_at_1", "top1_id", "top1_distance",
            ]
        )
        for qi, result in enumerate(results):
            ap = r1 = ""
            if gt is not None:
                ap = f"{average_precision(result.ids, gt.relevant(qi)):.6f}"
                r1 = recall_at(result.ids, gt.true_nn(qi), 1)
            writer.writerow(
                [
                    qi,
                    f"{report.per_query_times_ms[qi]:.6f}",
                    result.probe_count if result.probe_count is not None else "",
                    result.shortlist_size if result.shortlist_size is not None else "",
                    len(result),
                    ap,
                    r1,
                    int(result.ids[0]) if len(result) else "",
                    f"{result.distances[0]:.9g}" if len(result) else "",
                ]
            )


def cmd_eval(args) -> int:
    rows = read_ivecs(args.results)
    gt = GroundTruth(read_ivecs(args.groundtruth))
    rankings = [row[row >= 0] for row in rows]
    k = rows.shape[1] if rows.size else 1
    ks = sorted({c for c in (1, 10, 100, k) if 1 <= c <= k})
    payload = {
        "schema_version": 1,
        "num_queries": int(rows.shape[0]),
        "k": int(k),
        "map": mean_average_precision(rankings, gt),
        "recall_at_k": {
            str(c): v for c, v in recall_curve(rankings, gt, ks).items()
        },
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        log.info("report written to %s", args.out)
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boi",
        description=(
            "Approximate nearest-neighbor search via weighted multi-probe "
            "voting over hash tables, with LSH baselines and a brute-force "
            "oracle."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset with ground truth")
    p.add_argument("--out", required=True, help="existing output directory")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--clusters", type=int, default=32)
    p.add_argument("--cluster-std", type=float, default=0.05)
    p.add_argument("--num-queries", type=int, default=100)
    p.add_argument("--gt-k", type=int, default=10)
    p.add_argument("--query-jitter", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("build", help="hash a dataset into an index snapshot")
    p.add_argument("--dataset", required=True, help="base vectors (fvecs)")
    p.add_argument("--index", required=True, help="output snapshot path")
    _add_param_flags(p, for_build=True)
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("query", help="run queries and write/print rankings")
    p.add_argument("--dataset", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--index", help="snapshot (not needed for method=brute)")
    p.add_argument("--method", choices=METHODS, default="boi")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", help="result ids as ivecs, -1 padded")
    _add_param_flags(p, for_build=False)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("bench", help="measure accuracy, latency, probes, memory")
    p.add_argument("--dataset", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--groundtruth", help="exact neighbors (ivecs)")
    p.add_argument("--index", help="snapshot (not needed for method=brute)")
    p.add_argument("--method", choices=METHODS, default="boi")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="JSON report path (stdout when omitted)")
    p.add_argument("--csv", help="optional per-query CSV path")
    _add_param_flags(p, for_build=False)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("eval", help="score a results file against ground truth")
    p.add_argument("--results", required=True, help="rankings (ivecs, -1 padded)")
    p.add_argument("--groundtruth", required=True)
    p.add_argument("--out", help="JSON report path (stdout when omitted)")
    p.set_defaults(fn=cmd_eval)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except (OSError, ValueError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
