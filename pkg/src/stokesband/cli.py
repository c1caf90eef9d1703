"""Command line entry point for the experiment harness."""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .harness import (ExperimentConfig, emit_reports, run_consistency,
                      run_convergence, run_kernel_suite, run_mre_experiment,
                      run_proposition_checks)


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="JSON config file (lower_snake_case keys)")
    sub.add_argument("--out", help="CSV output path")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--R", type=float, action="append", dest="r_values",
                     help="bandwidth parameter; repeat for several values")
    sub.add_argument("--nz", type=int)
    sub.add_argument("--nt", type=int)
    sub.add_argument("--zmax", type=float)
    sub.add_argument("--horizon", type=float)
    sub.add_argument("--ensemble", type=int)
    sub.add_argument("--delta", type=float)
    sub.add_argument("--refine", type=int)
    sub.add_argument("--nx", type=int)
    sub.add_argument("--L", type=float)
    sub.add_argument("--d", type=int, choices=(2, 3))
    sub.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stokesband",
        description="Spectral laboratory for wall-bounded Stokes flow with "
                    "band-limited forcing")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, text in [
            ("mre", "maximal-regularity ratio campaign on the strip"),
            ("props", "elementary half-line estimate checks"),
            ("kernels", "heat and Poisson kernel bound verification"),
            ("lemmas", "bandedness inequality verification"),
            ("halfspace-consistency", "strip vs localized half-space check"),
            ("convergence", "refinement study of the reported norms")]:
        _add_common(subs.add_parser(name, help=text))
    return parser


def _config_from(args: argparse.Namespace) -> ExperimentConfig:
    overrides = dict(
        experiment=args.command, seed=args.seed, nz=args.nz, nt=args.nt,
        zmax=args.zmax, horizon=args.horizon, ensemble=args.ensemble,
        delta=args.delta, refine=args.refine, nx=args.nx, L=args.L, d=args.d,
        r_values=tuple(args.r_values) if args.r_values else None,
        out=args.out)
    return ExperimentConfig.from_sources(args.config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = _config_from(args)
    t0 = time.monotonic()
    summary = {}
    if config.experiment == "mre":
        records, summary = run_mre_experiment(config)
    elif config.experiment == "props":
        records = run_proposition_checks(config)
    elif config.experiment in ("kernels", "lemmas"):
        records, reports = run_kernel_suite(config)
        if config.experiment == "lemmas":
            records = [r for r in records if any(
                key in r["norm_name"] for key in
                ("banded", "half-order", "gradient", "projector"))]
        summary = {name: {"constant": rep.constant,
                          "stability": rep.stability,
                          "passes": rep.passes()}
                   for name, rep in reports.items()}
    elif config.experiment == "halfspace-consistency":
        records = run_consistency(config)
    elif config.experiment == "convergence":
        records = run_convergence(config)
    else:
        raise SystemExit(f"unknown command {config.experiment}")

    paths = []
    if config.out:
        paths = emit_reports(records, config.out)
    if not args.quiet:
        ratios = [r["ratio"] for r in records
                  if isinstance(r.get("ratio"), (int, float))
                  and np.isfinite(r["ratio"])]
        print(f"{config.experiment}: {len(records)} records, "
              f"max finite ratio "
              f"{max(ratios) if ratios else float('nan'):.6g}, "
              f"elapsed {time.monotonic() - t0:.1f}s")
        if summary:
            print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
        for p in paths:
            print(f"wrote {p}")
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


if __name__ == "__main__":
    sys.exit(main())
