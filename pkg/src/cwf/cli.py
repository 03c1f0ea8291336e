"""Command line entry point.

    cwf <subcommand> [--config path.json] [--seed N] [--trials N] [--out path]

Subcommands: thm1, queue, fading, waterfill (CSV sweeps) and validate (the
oracle suite).  Flags override config-file fields; without a config the
built-in defaults for the subcommand are used.

Exit codes: 0 success, 1 validation failure, 2 config error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig, default_config
from .quadrature import QuadratureError

SUBCOMMAND_KINDS = {
    "thm1": "thm1_sweep",
    "queue": "queue_sweep",
    "fading": "fading_sweep",
    "waterfill": "waterfill_sweep",
    "validate": "validate",
}

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMAND_KINDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="flat JSON experiment config")
        p.add_argument("--seed", type=int, help="root RNG seed (overrides config)")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        p.add_argument("--out", help="output CSV path")
    return parser


def _load_config(args) -> ExperimentConfig:
    kind = SUBCOMMAND_KINDS[args.subcommand]
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        if cfg.kind != kind:
            raise ConfigError(f"config kind {cfg.kind!r} does not match subcommand {args.subcommand!r}")
    else:
        cfg = default_config(kind)
    return cfg.override(seed=args.seed, trials=args.trials, out=args.out)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if cfg.kind == "validate":
            from .validate import run_validate

            out = cfg.out or "validate_report.csv"
            _, all_passed, _ = run_validate(cfg.resolved_seed, out)
            print(f"report written to {out}")
            return EXIT_OK if all_passed else EXIT_VALIDATION

        from . import sweeps

        out = cfg.out or f"{cfg.kind}.csv"
        if cfg.kind == "thm1_sweep":
            sweeps.run_thm1_sweep(cfg, out)
        elif cfg.kind == "queue_sweep":
            sweeps.run_queue_sweep(cfg, out)
        elif cfg.kind == "fading_sweep":
            sweeps.run_fading_sweep(cfg, out)
        else:
            _, failures = sweeps.run_waterfill_sweep(cfg, out)
            if failures:
                print(f"{failures} grid point(s) aborted on numeric errors", file=sys.stderr)
                print(f"partial results written to {out}")
                return EXIT_NUMERIC
        print(f"results written to {out}")
        return EXIT_OK
    except QuadratureError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
