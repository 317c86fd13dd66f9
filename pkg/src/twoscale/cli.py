"""Command-line entry point.

Subcommands:

  run <experiment-id>   reproduce one of the built-in experiment protocols
  sweep-eps             the timescale-ratio sweep (alias for fig5-barplot)
  verify-lemmas         Monte-Carlo certification of the analysis inequalities
  custom --config FILE  a run described by a TOML config

Output directory resolution: --outdir flag, then the TWOSCALE_OUTDIR
environment variable, then ./twoscale-out.  Exit codes: 0 success, 1
experiment failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .experiments import (
    EXPERIMENT_IDS,
    ConfigError,
    ExperimentError,
    ExperimentSpec,
    run_experiment,
)

DEFAULT_OUTDIR_ENV = "TWOSCALE_OUTDIR"


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = _parse_value(value.strip())
    return overrides


def _resolve_outdir(value, experiment_id: str) -> Path:
    base = value or os.environ.get(DEFAULT_OUTDIR_ENV) or "twoscale-out"
    return Path(base) / experiment_id


def _parse_seeds(text):
    if text is None:
        return None
    try:
        return tuple(int(part) for part in str(text).split(",") if part != "")
    except ValueError as exc:
        raise ConfigError(f"bad seed list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twoscale", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a built-in experiment")
    run_p.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENT_IDS)}")
    run_p.add_argument("--outdir", default=None)
    run_p.add_argument("--seeds", default=None, help="comma-separated, e.g. 0,1,2")
    run_p.add_argument("--faithful", action="store_true",
                       help="use the full reference budgets instead of the reduced defaults")
    run_p.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE")

    sweep_p = sub.add_parser("sweep-eps", help="timescale-ratio sweep with error bars")
    sweep_p.add_argument("--outdir", default=None)
    sweep_p.add_argument("--seeds", default=",".join(str(s) for s in range(20)))

    lemmas_p = sub.add_parser("verify-lemmas", help="run the inequality certification suite")
    lemmas_p.add_argument("--outdir", default=None)
    lemmas_p.add_argument("--trials", type=int, default=1000)

    custom_p = sub.add_parser("custom", help="run from a TOML config file")
    custom_p.add_argument("--config", required=True)
    custom_p.add_argument("--outdir", default=None)
    custom_p.add_argument("--seeds", default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            spec = ExperimentSpec(
                experiment_id=args.experiment,
                outdir=_resolve_outdir(args.outdir, args.experiment),
                seeds=_parse_seeds(args.seeds) or (0,),
                overrides=_parse_overrides(args.overrides),
                faithful=args.faithful,
            )
        elif args.command == "sweep-eps":
            spec = ExperimentSpec(
                experiment_id="fig5-barplot",
                outdir=_resolve_outdir(args.outdir, "fig5-barplot"),
                seeds=_parse_seeds(args.seeds),
            )
        elif args.command == "verify-lemmas":
            spec = ExperimentSpec(
                experiment_id="lemmas",
                outdir=_resolve_outdir(args.outdir, "lemmas"),
                overrides={"trials": args.trials},
            )
        elif args.command == "custom":
            config_path = Path(args.config)
            if not config_path.exists():
                raise ConfigError(f"config file not found: {config_path}")
            spec = ExperimentSpec(
                experiment_id="custom",
                outdir=_resolve_outdir(args.outdir, "custom"),
                seeds=_parse_seeds(args.seeds) or (0,),
                overrides={"config_path": str(config_path)},
            )
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        written = run_experiment(spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ExperimentError, RuntimeError, OSError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
