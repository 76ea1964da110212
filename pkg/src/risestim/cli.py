"""Command-line front end: run one experiment, write one CSV.

Exit codes: 0 on success, 2 for configuration problems (bad flags,
unreadable or invalid config file), 1 for runtime failures.
"""

import argparse
import os
import sys

from .exceptions import ConfigValidationError
from .harness import EXPERIMENTS, load_config, run, write_csv


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(
            f"seed must lie in [0, 2^64), got {value}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risestim",
        description="Monte Carlo experiments for RIS-aided channel estimation.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS,
                        help="which experiment grid to run")
    parser.add_argument("--config", required=True,
                        help="JSON config file (may be an empty object)")
    parser.add_argument("--seed", type=_u64, default=None,
                        help="RNG seed, overrides the config file")
    parser.add_argument("--trials", type=_positive, default=None,
                        help="Monte Carlo trials per grid point, overrides config")
    parser.add_argument("--out", default=None,
                        help="output directory (default: results)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.experiment, seed=args.seed,
                          trials=args.trials, out_dir=args.out)
    except ConfigValidationError as exc:
        for problem in exc.errors:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    try:
        records = run(cfg)
        os.makedirs(cfg.out_dir, exist_ok=True)
        out_path = os.path.join(cfg.out_dir, f"{cfg.experiment}.csv")
        write_csv(records, out_path)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(records)} rows to {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
