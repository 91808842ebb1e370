"""Command-line interface.

Subcommands: solve (offline), stream (one-pass), baseline (major/minor
equality heuristics), oracle (exact brute force), gen (synthetic data),
bench (experiment sweep), report (re-render a saved report).

Exit codes: 0 success, 2 infeasible instance or degenerate stream,
3 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .core import (
    DegenerateStreamError,
    FairKCenterError,
    InfeasibleInstanceError,
    OracleScaleError,
    ParseError,
    ProblemInstance,
    check_fairness,
    derive_proportional_bounds,
    objective,
)
from .harness import (
    ExperimentConfig,
    SyntheticSpec,
    emit_report,
    generate_blobs,
    ingest_csv,
    iter_replay,
    load_report,
    read_replay,
    run_experiment,
    write_replay,
)
from .offline import SolveStats, heuristic_allocation, solve_equality, solve_offline
from .oracle import brute_force_optimal
from .streaming import stream_solve

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_IO = 3


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="CSV file with a header row (or .bin replay for stream)")
    p.add_argument("--group-col", default="group", help="name of the group column")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--k", type=int, help="number of centers")
    size.add_argument(
        "--k-fraction", type=float, default=0.05, help="centers as a fraction of n"
    )
    p.add_argument(
        "--bounds-eps",
        type=float,
        default=0.1,
        help="half-width of the proportional quota band",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for the start-point draw")
    p.add_argument("--no-normalize", action="store_true", help="skip min-max scaling")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the result here instead of stdout")


def _load_dataset(args):
    if args.input.endswith(".bin"):
        return read_replay(args.input)
    return ingest_csv(args.input, args.group_col, normalize=not args.no_normalize)


def _make_instance(args, dataset):
    k = args.k if args.k is not None else max(1, int(args.k_fraction * dataset.n))
    bounds = derive_proportional_bounds(dataset, k, args.bounds_eps)
    return ProblemInstance(dataset=dataset, bounds=bounds)


def _emit_solution(args, dataset, instance, centers, extra=None):
    payload = {
        "objective": objective(dataset, centers),
        "k": instance.bounds.k,
        "fair": check_fairness(instance, centers),
        "centers": [int(c) for c in centers.ids],
        "per_group": [int(c) for c in centers.per_group],
        "lower": [int(x) for x in instance.bounds.lower],
        "upper": [int(x) for x in instance.bounds.upper],
    }
    if dataset.group_names is not None:
        payload["group_names"] = list(dataset.group_names)
    if extra:
        payload.update(extra)
    if args.format == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        lines = ["center_id,group"]
        groups = dataset.groups
        lines += ["%d,%d" % (c, groups[c]) for c in centers.ids]
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_solve(args) -> int:
    dataset = _load_dataset(args)
    instance = _make_instance(args, dataset)
    sink = open(args.dump_network, "w") if args.dump_network else None
    try:
        stats = SolveStats()
        centers = solve_offline(instance, start=_start(args, dataset), stats=stats, sink=sink)
    finally:
        if sink:
            sink.close()
    _emit_solution(args, dataset, instance, centers, {"probes": stats.probes})
    return EXIT_OK


def _cmd_baseline(args) -> int:
    dataset = _load_dataset(args)
    instance = _make_instance(args, dataset)
    alloc = heuristic_allocation(instance, args.mode)
    centers = solve_equality(instance, alloc.counts, start=_start(args, dataset))
    _emit_solution(
        args, dataset, instance, centers, {"mode": args.mode, "allocation": alloc.counts.tolist()}
    )
    return EXIT_OK


def _cmd_oracle(args) -> int:
    dataset = _load_dataset(args)
    instance = _make_instance(args, dataset)
    exact = brute_force_optimal(instance)
    from .core import CenterSet

    centers = CenterSet.from_ids(dataset, exact.ids)
    _emit_solution(args, dataset, instance, centers)
    return EXIT_OK


def _cmd_stream(args) -> int:
    if args.input.endswith(".bin"):
        points = iter_replay(args.input)
        dataset = read_replay(args.input)  # second copy only for reporting
    else:
        dataset = ingest_csv(args.input, args.group_col, normalize=not args.no_normalize)
        points = ((i, dataset.coords[i], int(dataset.groups[i])) for i in range(dataset.n))
    k = args.k if args.k is not None else max(1, int(args.k_fraction * dataset.n))
    bounds = derive_proportional_bounds(dataset, k, args.bounds_eps)
    instance = ProblemInstance(dataset=dataset, bounds=bounds)
    centers, stats = stream_solve(points, bounds, eps=args.eps, dedup=args.dedup)
    _emit_solution(
        args,
        dataset,
        instance,
        centers,
        {
            "stored_points": stats.peak_stored,
            "fallback": stats.fallback_used,
            "rungs": stats.beta + 1,
        },
    )
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.spec:
        with open(args.spec) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError("%s: %s" % (args.spec, exc)) from None
        spec = SyntheticSpec.from_dict(raw)
    else:
        spec = SyntheticSpec()
    if args.paper_scale:
        spec.points_per_blob = 5000
    if args.m is not None:
        spec.m = args.m
    if args.seed is not None:
        spec.seed = args.seed
    dataset = generate_blobs(spec)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(",".join("x%d" % j for j in range(dataset.dim)) + ",group\n")
            for i in range(dataset.n):
                fh.write(
                    ",".join(repr(float(v)) for v in dataset.coords[i])
                    + ",g%d\n" % dataset.groups[i]
                )
    if args.binary_out:
        write_replay(dataset, args.binary_out)
    if not args.out and not args.binary_out:
        sys.stdout.write("generated %d points, %d groups (use --out/--binary-out)\n" % (dataset.n, dataset.m))
    return EXIT_OK


def _cmd_bench(args) -> int:
    with open(args.config) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError("%s: %s" % (args.config, exc)) from None
    if args.paper_scale and raw.get("synthetic"):
        raw["synthetic"]["points_per_blob"] = 5000
    config = ExperimentConfig.from_dict(raw)
    report = run_experiment(config)
    text = emit_report(report, fmt=args.format, path=args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_report(args) -> int:
    report = load_report(getattr(args, "in"))
    if args.format in ("json", "csv"):
        text = emit_report(report, fmt=args.format, path=args.out)
        if not args.out:
            sys.stdout.write(text)
        return EXIT_OK
    # plain text aggregate table
    lines = ["algorithm      eps  runs fail  mean_objective  std_objective"]
    for agg in report.aggregates():
        lines.append(
            "%-12s %5s %5d %4d  %14s %14s"
            % (
                agg["algorithm"],
                agg["eps"],
                agg["runs"],
                agg["failures"],
                "-" if agg["mean_objective"] is None else "%.6f" % agg["mean_objective"],
                "-" if agg["std_objective"] is None else "%.6f" % agg["std_objective"],
            )
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _start(args, dataset) -> int:
    rng = np.random.default_rng(args.seed)
    return int(rng.integers(dataset.n))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairkcenter", description="Range-fair k-center clustering"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="offline 3-approximation")
    _add_instance_args(p)
    p.add_argument("--dump-network", help="append every replacement network to this file")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("stream", help="one-pass streaming approximation")
    _add_instance_args(p)
    p.add_argument("--eps", type=float, default=0.1, help="guess-ladder resolution")
    p.add_argument("--dedup", action="store_true", help="coalesce duplicate prefix points")
    p.set_defaults(func=_cmd_stream)

    p = sub.add_parser("baseline", help="equality-allocation heuristics")
    _add_instance_args(p)
    p.add_argument("--mode", choices=("major", "minor"), required=True)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("oracle", help="exact optimum by enumeration (tiny inputs)")
    _add_instance_args(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("gen", help="generate synthetic blob data")
    p.add_argument("--spec", help="JSON file with generator settings")
    p.add_argument("--m", type=int, help="override group count")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--paper-scale", action="store_true", help="5000 points per blob")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--binary-out", help="binary replay output path")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("bench", help="run an experiment sweep")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--paper-scale", action="store_true", help="5000 points per blob")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="report output path")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("report", help="render a saved report")
    p.add_argument("--in", required=True, help="JSON report path")
    p.add_argument("--format", choices=("json", "csv", "table"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InfeasibleInstanceError, DegenerateStreamError, OracleScaleError) as exc:
        print("infeasible: %s" % exc, file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ParseError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
