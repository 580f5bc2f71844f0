"""Command line entry point: ``fgibbs <experiment> --config PATH [...]``."""

from __future__ import annotations

import argparse
import sys

from .config import KINDS, ConfigError, load_config
from .runner import EXIT_ERROR, run_experiment

__all__ = ["build_parser", "main"]


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _workers(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("need at least one worker")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fgibbs", description="Focusing Gibbs measure experiments.")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="experiment")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind.replace('_', ' ')} experiment")
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--seed", type=_seed, help="overrides run.seed")
        p.add_argument("--out", help="output directory (overrides run.out)")
        p.add_argument("--workers", type=_workers, help="worker processes (overrides run.workers)")
        p.add_argument("--convention", choices=("twopi", "plain"), help="symbol convention")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.kind).with_overrides(args.seed, args.out, args.workers, args.convention)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    manifest = run_experiment(cfg)
    print(f"{manifest.kind}: {manifest.outcome} ({manifest.elapsed_seconds:.1f} s) -> {manifest.output_dir}")
    if manifest.error:
        print(manifest.error, file=sys.stderr)
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
