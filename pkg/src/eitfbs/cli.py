"""Command-line entry point: ``eitfbs <scenario> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, FbsError
from .io import read_config
from .scenarios import KINDS, resolve, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eitfbs", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scenario")
        p.add_argument("--config", required=True, type=Path, help="flat key = value config file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="maximum worker processes")
    suite = sub.add_parser("paper-suite", help="run every acceptance scenario and print a table")
    suite.add_argument("--out", type=Path, default=None, help="also write the table as JSON here")
    suite.add_argument("--jobs", type=int, default=1)
    suite.add_argument("--seed", type=int, default=None, help="accepted for symmetry; checks use fixed seeds")
    return parser


def _fail(exc: Exception) -> int:
    msg = " ".join(str(exc).split())
    print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
    return 2 if isinstance(exc, ConfigError) else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        return _fail(ConfigError("jobs", "must be >= 1"))

    if args.command == "paper-suite":
        from .suite import paper_suite

        return paper_suite(out=args.out, jobs=args.jobs)

    try:
        scenario = resolve(args.command, read_config(args.config), seed=args.seed)
        paths = run(scenario, args.out, jobs=args.jobs)
    except FbsError as exc:
        return _fail(exc)
    except (OSError, ArithmeticError) as exc:
        return _fail(exc)
    for path in paths:
        print(path)
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
