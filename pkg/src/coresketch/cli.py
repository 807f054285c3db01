"""Command-line front end: gen, build, sensitivity, solve, check, stream, distribute, bench.

Every run resolves one integer seed (--seed, else $CORESET_SEED, else fresh
entropy) and stamps it, the package version, and a SHA-256 of the semantic
configuration into each report, so identical config+seed reproduces each
artifact byte for byte — independent of --threads, which only schedules
work. Reports are versioned JSON with sorted keys; stdout carries reports
only, logging goes to stderr.

Exit codes: 0 ok, 1 validation error, 2 usage error, 3 error budget exceeded
(``check``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._util import child_rng
from .builder import build_details, build_kmeans_coreset
from .data import as_query
from .datagen import generate
from .harness import QuerySuite, coreset_error
from .io import iter_csv, load_dataset, save_dataset
from .seeding import bicriteria
from .sensitivity import sensitivity_bound
from .solver import lloyd_best_of, partition_count, ptas_exhaustive, solve_via_coreset
from .streaming import MergeReduceTree, distributed_build

__all__ = ["main"]

log = logging.getLogger("coresketch")

SCHEMA = "coreset-report/1"
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


# --- report plumbing ---------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _config_sha(kind: str, seed: int, config: dict) -> str:
    blob = json.dumps(_jsonable({"kind": kind, "seed": seed, **config}),
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _report(kind: str, seed: int, config: dict, payload: dict) -> dict:
    return _jsonable({
        "schema": SCHEMA,
        "kind": kind,
        "provenance": {
            "version": __version__,
            "seed": seed,
            "config_sha256": _config_sha(kind, seed, config),
        },
        "config": config,
        **payload,
    })


def _emit(report: dict, args, sidecar_for=None) -> None:
    """Write the report to the artifact sidecar and/or --report (stdout default)."""
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    wrote = False
    if sidecar_for is not None:
        Path(str(sidecar_for) + ".json").write_text(text)
        wrote = True
    if args.report is not None:
        Path(args.report).write_text(text)
        wrote = True
    if not wrote:
        sys.stdout.write(text)


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("CORESET_SEED")
    if env is not None:
        return int(env)
    return int(np.random.SeedSequence().entropy % 2 ** 63)


# --- subcommands -------------------------------------------------------------

def cmd_gen(args, seed: int) -> int:
    kind = args.kind.replace("-", "_")
    params = {}
    if kind == "uniform_box":
        params["d"] = args.d
    elif kind == "gmm":
        params.update(d=args.d, k=args.components,
                      separation=args.separation, sigma=args.sigma)
    dataset = generate(kind, args.n, seed=seed, **params)
    config = {"kind": kind, "n": args.n, **params}
    # generated sets are unweighted; omit the column so the example shapes
    # (adversarial n=4 -> 0,0,0,1) read off the file directly
    save_dataset(dataset, args.out, args.format, include_weights=False)
    log.info("wrote %d points (d=%d) to %s", dataset.n, dataset.d, args.out)
    report = _report("gen", seed, config,
                     {"n": dataset.n, "d": dataset.d, "out": str(args.out)})
    _emit(report, args, sidecar_for=args.out)
    return EXIT_OK


def _build_kwargs(args) -> dict:
    return dict(distribution=args.distribution, allow_weighted=args.allow_weighted,
                c_size=args.c_size, c_runs=args.bicriteria_runs,
                algorithm2_constants=args.alg2_constants)


def cmd_build(args, seed: int) -> int:
    dataset = load_dataset(args.input)
    details = build_details(dataset, args.k, epsilon=args.epsilon, delta=args.delta,
                            m=args.m, seed=seed, **_build_kwargs(args))
    coreset = details.coreset
    save_dataset(coreset.data, args.out, args.format, include_weights=True)
    log.info("coreset of %d rows (from %d) -> %s", coreset.size, dataset.n, args.out)
    config = {"input": str(args.input), "k": args.k, "epsilon": args.epsilon,
              "delta": args.delta, "m": args.m, **_build_kwargs(args)}
    payload = {
        "coreset": {**coreset.provenance.to_dict(), "size": coreset.size},
        "out": str(args.out),
    }
    if details.profile is not None:
        payload["sensitivity"] = {"alpha": details.profile.alpha,
                                  "total": details.profile.total}
    _emit(_report("build", seed, config, payload), args, sidecar_for=args.out)
    return EXIT_OK


def cmd_sensitivity(args, seed: int) -> int:
    dataset = load_dataset(args.input)
    seeds = bicriteria(dataset, args.k, args.delta, seed, args.bicriteria_runs)
    profile = sensitivity_bound(dataset, seeds, allow_weighted=args.allow_weighted,
                                algorithm2_constants=args.alg2_constants)
    lines = ["index,s,cluster"]
    for i, (s, c) in enumerate(zip(profile.values, profile.assignment)):
        lines.append(f"{i},{repr(float(s))},{int(c)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    config = {"input": str(args.input), "k": args.k, "delta": args.delta,
              "bicriteria_runs": args.bicriteria_runs,
              "alg2_constants": args.alg2_constants,
              "allow_weighted": args.allow_weighted}
    payload = {
        "alpha": profile.alpha,
        "beta": 1,
        "total": profile.total,
        "cluster_sizes": profile.cluster_counts,
        "mean_seed_cost": profile.mean_seed_cost,
        "n": dataset.n,
        "out": str(args.out),
    }
    _emit(_report("sensitivity", seed, config, payload), args, sidecar_for=args.out)
    return EXIT_OK


def cmd_solve(args, seed: int) -> int:
    dataset = load_dataset(args.input)
    config = {"input": str(args.input), "k": args.k, "method": args.method,
              "restarts": args.restarts, "partition_cap": args.partition_cap,
              "via_coreset": args.via_coreset, "epsilon": args.epsilon,
              "m": args.m, "delta": args.delta, **_build_kwargs(args)}
    if args.via_coreset:
        res = solve_via_coreset(dataset, args.k, epsilon=args.epsilon,
                                delta=args.delta, m=args.m, seed=seed,
                                solver=args.method, restarts=args.restarts,
                                partition_cap=args.partition_cap,
                                **_build_kwargs(args))
        payload = {
            "objective_on_full": res.cost_full_at_solution,
            "objective_on_coreset": res.solution.objective,
            "ratio": res.ratio,
            "iterations": res.solution.iterations,
            "solver": res.solver,
            "reference_objective_on_full": res.cost_full_at_reference,
            "coreset_size": res.coreset.size,
            "centers": res.solution.centers,
        }
    else:
        method = args.method
        if method == "auto":
            distinct = np.unique(dataset.points, axis=0).shape[0]
            method = ("ptas" if partition_count(distinct, args.k)
                      <= args.partition_cap else "lloyd")
        if method == "ptas":
            sol = ptas_exhaustive(dataset, args.k, args.partition_cap)
        else:
            sol = lloyd_best_of(dataset, args.k, args.restarts, seed)
        payload = {
            "objective_on_full": sol.objective,
            "objective_on_coreset": None,
            "ratio": None,
            "iterations": sol.iterations,
            "solver": method,
            "centers": sol.centers,
        }
    _emit(_report("solve", seed, config, payload), args)
    return EXIT_OK


def _load_suite(args, dataset, seed: int) -> QuerySuite:
    if args.suite == "default":
        return QuerySuite.default(dataset, args.k, seed=seed)
    spec = json.loads(Path(args.suite).read_text())
    queries = tuple(as_query(q) for q in spec["queries"])
    if not queries:
        raise ValueError(f"{args.suite}: no queries")
    sources = tuple(spec.get("sources") or ["file"] * len(queries))
    if len(sources) != len(queries):
        raise ValueError(f"{args.suite}: sources/queries length mismatch")
    return QuerySuite(queries=queries, sources=sources,
                      k=int(spec.get("k", queries[0].k)))


def cmd_check(args, seed: int) -> int:
    dataset = load_dataset(args.full)
    coreset = load_dataset(args.coreset)
    suite = _load_suite(args, dataset, seed)
    result = coreset_error(dataset, coreset, suite)
    config = {"full": str(args.full), "coreset": str(args.coreset),
              "k": args.k, "suite": str(args.suite),
              "epsilon_budget": args.epsilon_budget}
    payload = {**result.to_dict(), "epsilon_budget": args.epsilon_budget,
               "suite_size": len(suite.queries)}
    over = args.epsilon_budget is not None and result.max_error > args.epsilon_budget
    payload["within_budget"] = None if args.epsilon_budget is None else not over
    _emit(_report("check", seed, config, payload), args)
    if over:
        log.warning("max error %.6f exceeds budget %.6f",
                    result.max_error, args.epsilon_budget)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_stream(args, seed: int) -> int:
    tree = MergeReduceTree(args.k, args.block_size, args.level_epsilon,
                           delta=args.delta, m=args.m, seed=seed,
                           c_size=args.c_size,
                           algorithm2_constants=args.alg2_constants)
    for point, weight in iter_csv(args.input):
        tree.insert(point, weight)
    final = tree.finalize(args.final_m)
    save_dataset(final.data, args.out, args.format, include_weights=True)
    log.info("streamed %d points in %d blocks -> coreset of %d",
             tree.points_seen, tree.blocks_built, final.size)
    config = {"input": str(args.input), "k": args.k,
              "block_size": args.block_size, "level_epsilon": args.level_epsilon,
              "delta": args.delta, "m": args.m, "final_m": args.final_m,
              "c_size": args.c_size, "alg2_constants": args.alg2_constants}
    payload = {
        "points_seen": tree.points_seen,
        "blocks_built": tree.blocks_built,
        "occupied_levels": tree.occupied_levels(),
        "max_compress_depth": tree.max_compress_depth,
        "error_budget": tree.realized_error_budget(),
        "block_m": tree.block_m,
        "coreset_size": final.size,
        "out": str(args.out),
    }
    _emit(_report("stream", seed, config, payload), args, sidecar_for=args.out)
    return EXIT_OK


def cmd_distribute(args, seed: int) -> int:
    dataset = load_dataset(args.input)
    res = distributed_build(dataset, args.k, args.workers, epsilon=args.epsilon,
                            delta=args.delta, m=args.m, seed=seed,
                            partition=args.partition, threads=args.threads,
                            c_size=args.c_size,
                            algorithm2_constants=args.alg2_constants)
    save_dataset(res.coreset.data, args.out, args.format, include_weights=True)
    config = {"input": str(args.input), "k": args.k, "workers": args.workers,
              "partition": args.partition, "epsilon": args.epsilon,
              "delta": args.delta, "m": args.m, "c_size": args.c_size,
              "alg2_constants": args.alg2_constants}
    payload = {
        "workers": res.workers,
        "partition": res.partition,
        "worker_sizes": res.worker_sizes,
        "bytes_per_worker": res.bytes_per_worker,
        "total_bytes": res.total_bytes,
        "empty_workers": res.empty_workers,
        "merged_size": res.coreset.size,
        "out": str(args.out),
    }
    _emit(_report("distribute", seed, config, payload), args, sidecar_for=args.out)
    return EXIT_OK


def cmd_bench(args, seed: int) -> int:
    dataset = load_dataset(args.input)
    distributions = [s.strip() for s in args.compare.split(",") if s.strip()]
    for dist in distributions:
        if dist not in ("sensitivity", "uniform"):
            raise ValueError(f"unknown distribution {dist!r} in --compare")
    if not distributions:
        raise ValueError("--compare lists no distributions")
    suite = QuerySuite.default(dataset, args.k, seed=child_rng(seed, 0))
    results = []
    for di, dist in enumerate(distributions):
        errors = []
        for t in range(args.trials):
            coreset = build_kmeans_coreset(
                dataset, args.k, epsilon=args.epsilon, delta=args.delta,
                m=args.m, seed=child_rng(seed, 1 + di, t), distribution=dist,
                allow_weighted=args.allow_weighted, c_size=args.c_size,
                algorithm2_constants=args.alg2_constants)
            errors.append(coreset_error(dataset, coreset, suite).max_error)
        results.append({
            "distribution": dist,
            "trials": args.trials,
            "max_error": {"mean": float(np.mean(errors)),
                          "median": float(np.median(errors)),
                          "min": float(np.min(errors)),
                          "max": float(np.max(errors))},
            "per_trial": errors,
        })
        log.info("bench %s: mean max error %.4f", dist, float(np.mean(errors)))
    config = {"input": str(args.input), "k": args.k, "epsilon": args.epsilon,
              "delta": args.delta, "m": args.m, "trials": args.trials,
              "compare": ",".join(distributions),
              "allow_weighted": args.allow_weighted, "c_size": args.c_size,
              "alg2_constants": args.alg2_constants}
    payload = {"suite_size": len(suite.queries), "results": results}
    _emit(_report("bench", seed, config, payload), args)
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $CORESET_SEED, else fresh entropy)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads where applicable; never changes results")
    p.add_argument("--log-level", default="warning",
                   choices=["debug", "info", "warning", "error"])
    p.add_argument("--report", default=None,
                   help="write the JSON report to this path instead of stdout")


def _add_builder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--m", type=int, default=None,
                   help="sample size; overrides the epsilon-based recipe")
    p.add_argument("--distribution", choices=["sensitivity", "uniform"],
                   default="sensitivity")
    p.add_argument("--c-size", type=float, default=1.0,
                   help="leading constant in the sample-size recipe")
    p.add_argument("--bicriteria-runs", type=float, default=3.0,
                   help="c in runs = ceil(c ln(1/delta))")
    p.add_argument("--alg2-constants", action="store_true",
                   help="use the halved first two sensitivity coefficients")
    p.add_argument("--allow-weighted", action="store_true",
                   help="accept non-uniform input weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coresketch",
        description="Coresets for k-means: build, solve, verify.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark dataset")
    p.add_argument("--kind", required=True,
                   choices=["adversarial", "uniform-box", "gmm"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--components", type=int, default=3,
                   help="mixture components (gmm only)")
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "bin"], default=None)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="build a coreset from a dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    _add_builder_flags(p)
    p.add_argument("--out", required=True,
                   help="coreset output (CSV with weight column, or binary)")
    p.add_argument("--format", choices=["csv", "bin"], default=None)
    _add_common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("sensitivity", help="per-point sensitivity bounds")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--bicriteria-runs", type=float, default=3.0)
    p.add_argument("--alg2-constants", action="store_true")
    p.add_argument("--allow-weighted", action="store_true")
    p.add_argument("--out", required=True, help="per-point CSV output")
    _add_common(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("solve", help="k-means on a dataset, optionally via coreset")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=["auto", "lloyd", "ptas"], default="auto")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--partition-cap", type=int, default=1_000_000)
    p.add_argument("--via-coreset", action="store_true",
                   help="build a coreset first and solve on it")
    _add_builder_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="measure coreset error over a query suite")
    p.add_argument("--full", required=True, help="full dataset file")
    p.add_argument("--coreset", required=True, help="coreset file (with weights)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--suite", default="default",
                   help='"default" or a JSON file {"k":, "queries": [[[...]]]}')
    p.add_argument("--epsilon-budget", type=float, default=None,
                   help="exit 3 if the observed max error exceeds this")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("stream", help="merge-reduce coreset over a CSV stream")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--block-size", type=int, required=True)
    p.add_argument("--level-epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--final-m", type=int, default=None,
                   help="compress the final union down to this size")
    p.add_argument("--c-size", type=float, default=1.0)
    p.add_argument("--alg2-constants", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "bin"], default=None)
    _add_common(p)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("distribute", help="per-worker coresets, merged")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--workers", type=int, required=True)
    p.add_argument("--partition", choices=["rr", "contig"], default="rr")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--m", type=int, default=None, help="per-worker sample size")
    p.add_argument("--c-size", type=float, default=1.0)
    p.add_argument("--alg2-constants", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "bin"], default=None)
    _add_common(p)
    p.set_defaults(func=cmd_distribute)

    p = sub.add_parser("bench", help="compare sampling distributions")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--compare", default="sensitivity,uniform",
                   help="comma-separated distributions to benchmark")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--c-size", type=float, default=1.0)
    p.add_argument("--alg2-constants", action="store_true")
    p.add_argument("--allow-weighted", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    seed = _resolve_seed(args.seed)
    try:
        return args.func(args, seed)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
