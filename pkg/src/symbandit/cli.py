"""Command line entry point: run, sweep, plot, validate, enumerate, rip."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .errors import ConfigError
from .harness import emit_csv, load_config, read_csv, render_svg, run_experiment, summarize, sweep
from .environments import random_partition
from .partitions import Partition, PartitionClass, count_at_most, count_partitions, enumerate_partitions
from .subspace import SubspaceModel, rip_constant, sphere_exploration_sampler
from .validation import SUITE_ALIASES, SUITES, run_suite

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_OVERRIDES = ["d", "d0", "sigma", "T", "algorithm", "class", "selector", "seed", "seeds", "t1", "t2", "eps0", "out"]


def _add_experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file; flags override it")
    for name in _OVERRIDES:
        p.add_argument(f"--{name}", dest=name.replace("-", "_"))
    p.add_argument("--arm-set", dest="arm_set")
    p.add_argument("--stride")
    p.add_argument("--safety-c", dest="safety_c")


def _overrides(args) -> dict:
    keys = _OVERRIDES + ["arm_set", "stride", "safety_c"]
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _print_summary(records):
    for alg, s in summarize(records).items():
        print(alg, " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in s.items()))
    for r in records:
        if r.failed:
            print(f"seed {r.seed} failed: {r.metadata['error']}", file=sys.stderr)


def cmd_run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    rec = run_experiment(cfg)
    if cfg.out:
        emit_csv([rec], cfg.out)
    print(f"seed={rec.seed} algorithm={rec.algorithm} final_regret={rec.cumulative_regret[-1]:.6g}")
    print(f"selected={rec.selected_partition} true={rec.metadata['true_partition']}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    overrides = _overrides(args)
    if args.parallelism is not None:
        overrides["parallelism"] = args.parallelism
    cfg = load_config(args.config, overrides)
    seeds = cfg.seeds or (cfg.seed,)
    records = sweep(cfg, seeds, cfg.parallelism)
    if cfg.out:
        emit_csv(records, cfg.out)
    if args.svg:
        render_svg(records, args.svg)
    _print_summary(records)
    return EXIT_RUNTIME if all(r.failed for r in records) else EXIT_OK


def cmd_plot(args) -> int:
    records = [r for path in args.csv for r in read_csv(path)]
    render_svg(records, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    report = run_suite(args.suite, quick=args.quick)
    sys.stdout.write(report.text())
    return EXIT_RUNTIME if args.strict and not report.passed else EXIT_OK


def cmd_enumerate(args) -> int:
    c = PartitionClass.parse(args.cls)
    d = args.d
    if args.k is not None:
        print(f"count d={d} k={args.k} class={c.short}: {count_partitions(d, args.k, c)}")
    else:
        limit = args.max_blocks or d
        for k in range(1, limit + 1):
            print(f"k={k}: {count_partitions(d, k, c)}")
        print(f"total (k <= {limit}): {count_at_most(d, limit, c)}")
    if args.list:
        lo = args.k or 1
        hi = args.k or args.max_blocks or d
        for p in enumerate_partitions(d, c, hi):
            if p.k >= lo:
                print(p)
    return EXIT_OK


def cmd_rip(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.design:
        A = np.loadtxt(args.design, delimiter=",", ndmin=2)
        if args.normalize:
            A = A / math.sqrt(A.shape[0])
    else:
        if args.n is None or args.d is None:
            raise ConfigError("n", "give --design or both --n and --d")
        A = sphere_exploration_sampler(args.d, rng, args.n) / math.sqrt(args.n)
    d = A.shape[1]
    if args.model:
        models = [SubspaceModel.from_partition(Partition.parse(m, d)) for m in args.model]
    else:
        models = [
            SubspaceModel.from_partition(random_partition(d, args.blocks, PartitionClass.ALL, rng))
            for _ in range(args.models)
        ]
    delta = rip_constant(A, models)
    for m in models:
        print(f"model {m.partition}")
    print(f"delta = {delta:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symbandit", description="Linear bandits with hidden coordinate symmetry.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one seeded experiment")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="one experiment per seed, optionally in parallel")
    _add_experiment_flags(p)
    p.add_argument("--parallelism", "-j")
    p.add_argument("--svg", help="also write a regret plot")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="SVG of median regret with IQR band from CSV files")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("validate", help="Monte-Carlo validation suites")
    p.add_argument("suite", choices=SUITES + tuple(SUITE_ALIASES))
    p.add_argument("--quick", action="store_true", help="fewer seeds")
    p.add_argument("--strict", action="store_true", help="exit 1 when a check fails")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("enumerate", help="count or list partitions of a class")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--class", dest="cls", default="all")
    p.add_argument("--k", type=int)
    p.add_argument("--max-blocks", type=int)
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("rip", help="restricted isometry constant of a design on partition models")
    p.add_argument("--design", help="CSV matrix, rows are samples")
    p.add_argument("--normalize", action="store_true", help="divide the supplied design by sqrt(n)")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--model", action="append", help="partition such as '1,2|3|4'; repeatable")
    p.add_argument("--models", type=int, default=2, help="number of random models when --model is absent")
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
