#!/usr/bin/env python3
"""
Command-line entry point for coopadmm.
"""

import argparse
import sys
from typing import List, Optional

from coopadmm.application import CoopAdmmApplication
from coopadmm.core.constants import BACKENDS, DEFAULT_SETTINGS_FILE, EXIT_ERROR
from coopadmm.core.error_handler import format_error


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {value}")
    return seed


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopadmm",
                                     description="Cooperative multi-vehicle trajectory optimization by ADMM")
    parser.add_argument("--settings", default=DEFAULT_SETTINGS_FILE, help="runtime settings INI file")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-iteration progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a scenario and write reports")
    run.add_argument("--config", required=True, help="scenario JSON file")
    run.add_argument("--backend", choices=BACKENDS, default=None, help="projection back-end")
    run.add_argument("--seed", type=_seed, default=None, help="seed of jitter and randomised extraction")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--trials", type=_positive_int, default=1, help="number of seeded trials")
    run.add_argument("--no-plots", action="store_true", help="skip SVG figures")

    compare = sub.add_parser("compare", help="run every back-end and write the summary table")
    compare.add_argument("--config", required=True, help="scenario JSON file")
    compare.add_argument("--out", default=None, help="output directory")
    compare.add_argument("--seed", type=_seed, default=None)
    compare.add_argument("--trials", type=_positive_int, default=1)

    validate = sub.add_parser("validate", help="check scenario invariants only")
    validate.add_argument("--config", required=True, help="scenario JSON file")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point."""
    args = build_parser().parse_args(argv)
    app = CoopAdmmApplication(args.settings, verbose=args.verbose)
    try:
        if not app.initialize():
            return EXIT_ERROR
        if args.command == "run":
            return app.run(args.config, args.backend, args.seed, args.out, args.trials, plots=not args.no_plots)
        if args.command == "compare":
            return app.compare(args.config, args.out, args.seed, args.trials)
        return app.validate(args.config)
    except Exception as e:
        print(format_error(e), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
