"""Command-line front end.

    lab <experiment> --config cfg.json [--seed N --salt N --out DIR
                                        --levels K --paths N --workers W
                                        --plot]
    lab kernel --s S --y Y
    lab validate --config cfg.json

Experiments write their canonical CSV (plus sidecar JSON, and a
plot-ready CSV under --plot) into --out, the SPDELAB_OUT environment
variable, or the current directory, in that order of preference.  The
process exit code is the number of failed verdicts, so 0 means pass.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_study
from .halfline import KernelQuadrature, kernel_dy, kernel_mass, poisson_kernel

_OUT_ENV = "SPDELAB_OUT"


def _study_parser(sub, name, runner):
    p = sub.add_parser(name, help=runner.__doc__.splitlines()[0].lower())
    p.add_argument("--config", required=True, help="path to the JSON study configuration")
    p.add_argument("--seed", type=int, default=None, help="override ensemble.master_seed")
    p.add_argument("--salt", type=int, default=None, help="override ensemble.stream_salt")
    p.add_argument("--out", default=None, help=f"output directory (default ${_OUT_ENV} or .)")
    p.add_argument("--levels", type=int, default=None, help="override the refinement level count")
    p.add_argument("--paths", type=int, default=None, help="override the ensemble path count")
    p.add_argument("--workers", type=int, default=1, help="quadrature worker threads")
    p.add_argument("--plot", action="store_true", help="also write the long-format plot CSV")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lab",
        description="studies of stochastic parabolic Dirichlet problems on the half-space",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in EXPERIMENTS.items():
        _study_parser(sub, name, runner)

    pk = sub.add_parser("kernel", help="evaluate the wall kernel and its mass")
    pk.add_argument("--s", type=float, required=True, help="time argument s > 0")
    pk.add_argument("--y", type=float, required=True, help="wall distance y >= 0")
    pk.add_argument("--rel-tol", type=float, default=1e-10, help="mass quadrature tolerance")

    pv = sub.add_parser("validate", help="check a configuration without running it")
    pv.add_argument("--config", required=True, help="path to the JSON study configuration")
    return parser


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    raw = copy.deepcopy(config.raw)
    ens = raw.setdefault("ensemble", {})
    if args.seed is not None:
        ens["master_seed"] = args.seed
    if args.salt is not None:
        ens["stream_salt"] = args.salt
    if args.paths is not None:
        ens["paths"] = args.paths
    if args.levels is not None:
        raw["levels"] = args.levels
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "kernel":
        quad = KernelQuadrature(rel_tol=args.rel_tol)
        print(f"P(s={args.s}, y={args.y}) = {poisson_kernel(args.s, args.y)!r}")
        print(f"dP/dy(s={args.s}, y={args.y}) = {kernel_dy(args.s, args.y)!r}")
        if args.y > 0:
            mass = kernel_mass(args.y, quad)
            print(f"mass(y={args.y}) = {mass!r}  (defect {abs(mass - 1.0):.3e})")
        return 0

    if args.command == "validate":
        try:
            config = ExperimentConfig.from_file(args.config)
            checks = config.validate()
        except (ConfigError, OSError, ValueError) as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return 1
        print(f"ok: {config.experiment} configuration is admissible")
        for key, rep in checks.items():
            if hasattr(rep, "lower_margin"):
                print(
                    f"  {key}: parabolicity margins {rep.lower_margin:.3e} / {rep.upper_margin:.3e}"
                )
        return 0

    try:
        config = _apply_overrides(ExperimentConfig.from_file(args.config), args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    if config.experiment != args.command:
        print(
            f"configuration is for {config.experiment!r}, not {args.command!r}",
            file=sys.stderr,
        )
        return 1

    report = run_study(config, workers=args.workers)
    report.flags = {
        "config": os.path.abspath(args.config),
        "seed": args.seed,
        "salt": args.salt,
        "out": args.out,
        "levels": args.levels,
        "paths": args.paths,
        "workers": args.workers,
        "plot": args.plot,
    }
    out_dir = args.out or os.environ.get(_OUT_ENV) or "."
    paths = report.write(out_dir, plot=args.plot)

    for v in report.verdicts:
        mark = "pass" if v.passed else "FAIL"
        print(f"[{mark}] {report.study}:{v.name}  {v.detail}")
    print(f"wrote {paths['csv']}  ({report.wall_clock:.1f}s)")
    return report.n_failed


if __name__ == "__main__":
    raise SystemExit(main())
