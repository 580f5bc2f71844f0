"""Run every shipped config and print one status line per experiment.

    python3 scripts/run_all_configs.py [--out results] [--workers 1] [--only drift]
"""

import argparse
import sys
from pathlib import Path

from focusing_gibbs.cli_runner import load_config, run_experiment

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default="results", help="root directory for run outputs")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--only", default="", help="substring filter on config file names")
    args = parser.parse_args(argv)

    worst = 0
    for path in sorted(CONFIGS.glob("*.cfg")):
        if args.only not in path.name:
            continue
        cfg = load_config(path).with_overrides(workers=args.workers, out=str(Path(args.out) / path.stem))
        m = run_experiment(cfg)
        print(f"{path.stem:24s} {m.outcome:12s} {m.elapsed_seconds:8.1f}s  {m.output_dir}", flush=True)
        if m.error:
            print(f"    {m.error}", flush=True)
        worst = max(worst, m.exit_code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
