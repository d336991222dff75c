"""Command-line surface for the batch experiments.

Subcommands: spark-map, recovery-sweep, pipeline-check, gen-config.  All
take --config/--out/--seed/--threads/--preset; CSV files are the output
contract, SVG plots are optional derivatives.  Exit code 0 means every
requested check passed.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .harness import (ExperimentPlan, minimal_rate_90, monotonicity_violations,
                      preset_config, run_pipeline_check, run_recovery_sweep,
                      run_spark_map, write_curve_svg)
from .params import read_config, write_config


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=str, default=None,
                     help="config file overriding the preset base")
    sub.add_argument("--out", type=str, default="out",
                     help="output directory for CSV/SVG")
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--threads", type=int, default=max(1, os.cpu_count() or 1),
                     help="worker processes for Monte-Carlo points")
    sub.add_argument("--preset", choices=("paper", "ci"), default="paper",
                     help="base parameter set")


def _base_config(args):
    if args.config:
        cfg = read_config(args.config)
        return replace(cfg, master_seed=args.seed)
    return preset_config(args.preset, master_seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subnyq",
        description="Sub-Nyquist multiband acquisition experiments")
    subs = parser.add_subparsers(dest="command", required=True)

    spark = subs.add_parser("spark-map",
                            help="column-independence rate over a (p, q') grid")
    _add_common(spark)
    spark.add_argument("--p-max", type=int, default=None)
    spark.add_argument("--q-max", type=int, default=None)
    spark.add_argument("--trials", type=int, default=None)

    sweep = subs.add_parser("recovery-sweep",
                            help="support-recovery rate vs total sampling rate")
    _add_common(sweep)
    sweep.add_argument("--p", type=int, nargs="+", default=None,
                       help="aliasing parameters to sweep")
    sweep.add_argument("--q-min", type=int, default=None)
    sweep.add_argument("--q-max", type=int, default=None)
    sweep.add_argument("--kb", type=int, default=None,
                       help="two-sided band count")
    sweep.add_argument("--snr-db", type=float, default=None,
                       help="omit for noiseless")
    sweep.add_argument("--lpf", choices=("ideal", "random"), default=None)
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--svg", action="store_true",
                       help="also plot the curves")

    check = subs.add_parser("pipeline-check",
                            help="simulation-vs-model equality gate")
    _add_common(check)
    check.add_argument("--n-configs", type=int, default=50)
    check.add_argument("--threshold", type=float, default=1e-9)

    gen = subs.add_parser("gen-config", help="write a config template")
    _add_common(gen)

    return parser


def _cmd_spark_map(args) -> int:
    base = _base_config(args)
    if args.preset == "ci":
        p_max, q_max, trials = 4, 9, 100
    else:
        p_max, q_max, trials = 10, 25, 1000
    plan = ExperimentPlan(
        kind="spark_map",
        base=base,
        p_values=tuple(range(1, (args.p_max or p_max) + 1)),
        q_range=(1, args.q_max or q_max),
        trials=args.trials or trials,
        threads=args.threads,
        out_dir=args.out,
    )
    rows = run_spark_map(plan)
    path = os.path.join(args.out, "spark_map.csv")
    full = sum(1 for r in rows if r["rate"] == 1.0)
    print(f"spark-map: {len(rows)} grid points, {full} fully independent "
          f"-> {path}")
    return 0


def _cmd_recovery_sweep(args) -> int:
    base = _base_config(args)
    if args.lpf:
        base = replace(base, lpf_kind=args.lpf)
    if args.preset == "ci":
        defaults = dict(p=(1, 2), q_range=(3, 9), kb=4, trials=10)
    else:
        defaults = dict(p=(1, 2, 3, 4), q_range=(5, 19), kb=10, trials=100)
    plan = ExperimentPlan(
        kind="recovery_sweep",
        base=base,
        p_values=tuple(args.p) if args.p else defaults["p"],
        q_range=(args.q_min or defaults["q_range"][0],
                 args.q_max or defaults["q_range"][1]),
        k_b=args.kb or defaults["kb"],
        snr_db=args.snr_db,
        trials=args.trials or defaults["trials"],
        threads=args.threads,
        out_dir=args.out,
    )
    points = run_recovery_sweep(plan)
    for p in plan.p_values:
        sub = [pt for pt in points if pt.p == p]
        rate90 = minimal_rate_90(sub)
        shown = f"{rate90 / 1e9:.3f} GHz" if rate90 else "not reached"
        print(f"p={p}: minimal 90% total rate {shown}")
    violations = monotonicity_violations(points)
    if violations:
        print(f"note: {len(violations)} monotonicity violations beyond "
              "2-sigma binomial noise")
    if args.svg:
        svg_path = os.path.join(args.out, "recovery_sweep.svg")
        write_curve_svg(points, svg_path)
        print(f"plot -> {svg_path}")
    print(f"csv -> {os.path.join(args.out, 'recovery_sweep.csv')}")
    return 0


def _cmd_pipeline_check(args) -> int:
    base = _base_config(args)
    plan = ExperimentPlan(
        kind="pipeline_check",
        base=base,
        n_configs=args.n_configs,
        threads=args.threads,
        out_dir=args.out,
    )
    report = run_pipeline_check(plan, threshold=args.threshold)
    status = "PASS" if report["passed"] else "FAIL"
    print(f"pipeline-check: worst relative error {report['worst_error']:.3e} "
          f"over {report['n_configs']} configs "
          f"(threshold {report['threshold']:.1e}) -> {status}")
    return 0 if report["passed"] else 1


def _cmd_gen_config(args) -> int:
    cfg = _base_config(args)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "config.txt")
    write_config(cfg, path)
    print(f"config -> {path}")
    return 0


_COMMANDS = {
    "spark-map": _cmd_spark_map,
    "recovery-sweep": _cmd_recovery_sweep,
    "pipeline-check": _cmd_pipeline_check,
    "gen-config": _cmd_gen_config,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
