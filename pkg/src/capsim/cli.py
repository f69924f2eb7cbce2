"""Command-line entry point: one subcommand per experiment kind.

Usage: capsim <kind> --config cfg.json [--seed N] [--trials N]
       [--out results.csv] [--workers N] [--quiet]

The CAPSIM_OUT_DIR environment variable prefixes relative --out paths.
Exit status 0 on success, 2 on configuration or protocol errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .core import ProtocolError
from .graphgen import StimulusOverlapError
from .harness import (KINDS, ConfigError, load_config, rows_to_csv_bytes,
                      run_experiment, write_csv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capsim",
        description="Seeded assembly-dynamics experiments with CSV output.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--trials", type=int, default=None, help="trial count override")
        p.add_argument("--out", default=None, help="CSV output path")
        p.add_argument("--workers", type=int, default=1, help="trial worker processes")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def resolve_out(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_absolute():
        base = os.environ.get("CAPSIM_OUT_DIR")
        if base:
            path = Path(base) / path
    return path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.kind != args.kind:
            raise ConfigError(
                f"config kind {cfg.kind!r} does not match subcommand {args.kind!r}")
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError("--trials: must be >= 1")
            cfg = replace(cfg, trials=args.trials)

        progress = None
        if not args.quiet:
            def progress(i, total=cfg.trials, name=cfg.name):
                print(f"[{name}] finished trial {i + 1}/{total}", file=sys.stderr)

        rows = run_experiment(cfg, workers=max(1, args.workers), progress=progress)
        if args.out:
            out = resolve_out(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            write_csv(rows, out)
            if not args.quiet:
                print(f"[{cfg.name}] wrote {len(rows)} rows to {out}", file=sys.stderr)
        else:
            sys.stdout.write(rows_to_csv_bytes(rows).decode("utf-8"))
    except (ConfigError, ProtocolError, StimulusOverlapError, OSError) as exc:
        print(f"capsim: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
