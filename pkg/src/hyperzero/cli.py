"""Command line front end.

Usage follows `hyperzero <experiment> [flags]`; a TOML config file can
supply any field and individual flags override it. Exit codes: 0 on
success, 1 on configuration errors, 2 on trial/runtime failures, 3 when
a requested statistical comparison fails the 4 sigma policy.
"""

from __future__ import annotations

import argparse
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import ConfigInvalid, GeometryMismatch, HyperzeroError, TrialFailure
from .harness import EXPERIMENTS, ExperimentConfig, ResultRecord, compare, run

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad usage as ConfigInvalid instead of exiting."""

    def error(self, message):
        raise ConfigInvalid([message])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hyperzero",
        description="Monte Carlo experiments on zeros of random analytic series.",
    )
    parser.add_argument("--version", action="version", version=f"hyperzero {__version__}")
    parser.add_argument("experiment", nargs="?", choices=EXPERIMENTS,
                        help="experiment to run (may also come from --config)")
    parser.add_argument("--config", metavar="FILE", help="TOML config file")
    parser.add_argument("--law", help="coefficient law: gaussian, rademacher, uniform, sparse")
    parser.add_argument("--law-param", action="append", default=[], metavar="K=V",
                        help="law parameter, e.g. p=0.1 (repeatable)")
    parser.add_argument("--u", action="append", default=[], metavar="RE[,IM]",
                        help="basepoint u (repeatable)")
    parser.add_argument("--center", action="append", default=[], metavar="RE[,IM]",
                        help="ball center / statistic point (repeatable)")
    parser.add_argument("--epsilon", action="append", default=[], type=float, metavar="V",
                        help="ball radius (repeatable, strictly decreasing for grids)")
    parser.add_argument("--weight", action="append", default=[], metavar="RE[,IM]",
                        help="statistic weight lambda_i (repeatable, clt only)")
    parser.add_argument("--radius", type=float, help="search radius (intensity, roots-bench)")
    parser.add_argument("--bins", type=int, help="annulus count (intensity)")
    parser.add_argument("--trials", type=int, help="trials / samples per cell")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--degree-min", type=int, help="smallest degree (roots-bench)")
    parser.add_argument("--degree-max", type=int, help="largest degree (roots-bench)")
    parser.add_argument("--tail-tolerance", type=float, help="certified tail RMS bound")
    parser.add_argument("--safety-factor", type=float, help="tail bound safety factor")
    parser.add_argument("--nodes", type=int, help="quadrature nodes per contour")
    parser.add_argument("--threads", type=int, help="worker threads (default $HYPERZERO_THREADS or 1)")
    parser.add_argument("--out", metavar="PATH", help="write the result record as JSON")
    parser.add_argument("--csv", metavar="PATH", help="write the flat cell table as CSV")
    parser.add_argument("--baseline", metavar="PATH",
                        help="compare against a baseline record (universality)")
    parser.add_argument("--kernel-c", type=float, metavar="C",
                        help="compare correlations cells against kernel_determinant with this constant")
    return parser


def _parse_law_params(items) -> dict:
    params = {}
    for item in items:
        if "=" not in item:
            raise ConfigInvalid([f"--law-param expects K=V, got {item!r}"])
        key, text = item.split("=", 1)
        try:
            value = float(text)
        except ValueError:
            value = text
        params[key.strip()] = value
    return params


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigInvalid([f"cannot read config file {path}: {exc}"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid([f"config file {path}: {exc}"]) from exc


def _build_config(args) -> ExperimentConfig:
    mapping = {}
    if args.config:
        mapping.update(_load_config_file(args.config))
    if args.experiment:
        mapping["experiment"] = args.experiment
    if args.law:
        mapping["law"] = args.law
    if args.law_param:
        mapping["law_params"] = {**mapping.get("law_params", {}), **_parse_law_params(args.law_param)}
    if args.u:
        mapping["u_values"] = args.u
    if args.center:
        mapping["centers"] = args.center
    if args.epsilon:
        mapping["epsilons"] = args.epsilon
    if args.weight:
        mapping["weights"] = args.weight
    overrides = {
        "radius": args.radius,
        "bins": args.bins,
        "trials": args.trials,
        "master_seed": args.seed,
        "degree_min": args.degree_min,
        "degree_max": args.degree_max,
        "tail_tolerance": args.tail_tolerance,
        "safety_factor": args.safety_factor,
        "quadrature_nodes": args.nodes,
        "threads": args.threads,
        "out": args.out,
        "csv_out": args.csv,
    }
    for key, value in overrides.items():
        if value is not None:
            mapping[key] = value
    if "threads" not in mapping:
        env = os.environ.get("HYPERZERO_THREADS")
        if env:
            try:
                mapping["threads"] = int(env)
            except ValueError as exc:
                raise ConfigInvalid([f"HYPERZERO_THREADS must be an integer, got {env!r}"]) from exc
    return ExperimentConfig.from_mapping(mapping)


def _format(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _build_config(args)
        record = run(config)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TrialFailure as exc:
        print(f"trial failure: {exc}", file=sys.stderr)
        return 2
    except HyperzeroError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2

    print(f"experiment: {record.experiment}")
    print(f"cells: {len(record.cells)}")
    for key, value in record.summary.items():
        print(f"{key}: {_format(value)}")
    print(f"wall_clock_s: {_format(record.meta.get('wall_clock_s'))}")
    if config.out:
        print(f"wrote: {config.out}")
    if config.csv_out:
        print(f"wrote: {config.csv_out}")

    wants_compare = args.baseline is not None or args.kernel_c is not None
    if not wants_compare:
        return 0
    try:
        if args.baseline is not None:
            baseline = ResultRecord.read_json(args.baseline)
            report = compare(record, baseline)
        else:
            report = compare(record, "kernel-determinant", kernel_c=args.kernel_c)
    except (GeometryMismatch, OSError, KeyError, ValueError) as exc:
        print(f"comparison setup error: {exc}", file=sys.stderr)
        return 1
    print(f"comparison: {report.kind}")
    print(f"max_deviation_sigmas: {report.max_deviation:.3f}")
    print(f"passed: {report.passed}")
    if not report.passed:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
