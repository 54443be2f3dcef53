#!/usr/bin/env python3
"""
nfa-lab
Command-line interface for training deep linear networks and checking the
alignment of their first-layer features with the AGOP.
"""

import argparse
import json
import os
import sys

from errors import ConfigInvalid, NfaLabError
from harness import SEED_ENV, counterexample_report, load_config, report, run, sweep
from targets import COUNTEREXAMPLE_SAMPLES

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfa-lab", description="Neural feature alignment experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="Train a single configuration")
    run_p.add_argument("config", help="Experiment config (JSON)")
    run_p.add_argument("--paper-scale", action="store_true", help="Width 64, N 2048, 60,000 epochs")
    run_p.add_argument("--output-dir", "-o", help="Override the config's output directory")
    run_p.add_argument("--quiet", "-q", action="store_true", help="Suppress status lines")

    sweep_p = sub.add_parser("sweep", help="Run a Cartesian product of configurations")
    sweep_p.add_argument("config", help="Base experiment config (JSON)")
    sweep_p.add_argument("--axes", required=True, help="JSON file mapping parameters to value lists")
    sweep_p.add_argument("--jobs", "-j", type=int, default=1, help="Concurrent runs (default: 1)")
    sweep_p.add_argument("--paper-scale", action="store_true", help="Width 64, N 2048, 60,000 epochs")
    sweep_p.add_argument("--output-dir", "-o", help="Override the config's output directory")
    sweep_p.add_argument("--quiet", "-q", action="store_true", help="Suppress status lines")

    ce_p = sub.add_parser("counterexample", help="Reproduce one of the counterexamples")
    ce_p.add_argument("name", choices=["relu_sum", "oscillation"])
    ce_p.add_argument("--n", type=int, help="Single oscillation frequency (default: 1, 2, 5, 10)")
    ce_p.add_argument("--samples", type=int, default=COUNTEREXAMPLE_SAMPLES,
                      help=f"Monte-Carlo samples (default: {COUNTEREXAMPLE_SAMPLES})")
    ce_p.add_argument("--seed", type=int, help="Sampling seed (default: $NFA_LAB_SEED or 0)")
    ce_p.add_argument("--output-dir", "-o", default="runs/counterexamples")

    report_p = sub.add_parser("report", help="Render a sweep directory as per-rank tables")
    report_p.add_argument("directory", help="Directory holding sweep_summary.csv")
    return parser


def _with_output_dir(cfg, output_dir):
    if output_dir:
        cfg.output_dir = output_dir
    return cfg


def _counterexample_seed(seed):
    if seed is not None:
        return seed
    try:
        return int(os.environ.get(SEED_ENV) or 0)
    except ValueError as exc:
        raise ConfigInvalid(f"{SEED_ENV} must be an integer") from exc


def _load_axes(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            axes = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read axes {path}: {exc}") from exc
    if not isinstance(axes, dict):
        raise ConfigInvalid("axes must be a JSON object of value lists")
    return axes


def main(argv=None) -> int:
    """Main function for command-line interface."""
    args = build_parser().parse_args(argv)

    try:
        if args.command == "run":
            cfg = _with_output_dir(load_config(args.config, args.paper_scale), args.output_dir)
            summary = run(cfg, verbose=not args.quiet)
            if summary.status != "ok":
                return EXIT_DIVERGED
            print(f"✓ Artifacts written to {cfg.output_dir}")
            return EXIT_OK

        if args.command == "sweep":
            cfg = _with_output_dir(load_config(args.config, args.paper_scale), args.output_dir)
            summaries = sweep(cfg, _load_axes(args.axes), jobs=args.jobs, verbose=not args.quiet)
            failed = sum(1 for s in summaries if s.status != "ok")
            if failed:
                print(f"⚠ {failed} of {len(summaries)} runs failed (nan rows)")
            print(f"✓ Sweep summary written to {os.path.join(cfg.output_dir, 'sweep_summary.csv')}")
            return EXIT_OK

        if args.command == "counterexample":
            counterexample_report(args.name, n=args.n, output_dir=args.output_dir,
                                  samples=args.samples, seed=_counterexample_seed(args.seed), verbose=True)
            return EXIT_OK

        if args.command == "report":
            report(args.directory, verbose=True)
            return EXIT_OK
    except ConfigInvalid as exc:
        print(f"✗ Config error: {exc}")
        return EXIT_CONFIG
    except NfaLabError as exc:
        print(f"✗ {type(exc).__name__}: {exc}")
        return EXIT_FAILURE
    except Exception as exc:
        print(f"✗ Unexpected error: {exc}")
        return EXIT_FAILURE
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
