"""Command-line entry point ``lossy-qed``.

Exit codes: 0 all checks pass; 1 a tolerance check failed (files still
written); 2 usage or configuration error; 3 numerical or I/O error (no
files written).
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from ._parallel import thread_count
from .config import EXPERIMENTS, ingest_susceptibility_csv, load_config, parse_tol_override
from .errors import ConfigError, LossyQEDError
from .experiments import EXIT_NUMERICAL, EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, run_experiment


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lossy-qed", description="Lossy-dielectric QED kernels and equivalence checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("config", help="path to a key = value config file")
    run.add_argument("--experiment", help=f"override the experiment ({', '.join(EXPERIMENTS)})")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                     help="override a named tolerance (repeatable)")
    val = sub.add_parser("validate", help="check a measured omega,im_chi CSV file")
    val.add_argument("csv", help="path to the CSV file")
    return p


def _run(args) -> int:
    try:
        thread_count()
        overrides = dict(parse_tol_override(t) for t in args.tol)
        cfg = load_config(args.config).with_overrides(args.experiment, args.out, overrides)
    except ConfigError as exc:
        print(f"lossy-qed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LossyQEDError as exc:
        print(f"lossy-qed: input error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"lossy-qed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lossy-qed: I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        status, failures = run_experiment(cfg)
    except (LossyQEDError, ArithmeticError, ValueError, OSError) as exc:
        print(f"lossy-qed: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if status == EXIT_TOLERANCE:
        print(f"lossy-qed: tolerance check failed: {', '.join(failures)}", file=sys.stderr)
    else:
        print(f"lossy-qed: {cfg.experiment}: all checks passed; outputs in {cfg.output_dir}")
    return status


def _validate(args) -> int:
    try:
        grid = ingest_susceptibility_csv(args.csv)
    except (LossyQEDError, OSError) as exc:
        print(f"lossy-qed: invalid input: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"samples: {len(grid)}")
    print(f"omega_min: {grid.omega_min:.15g}")
    print(f"omega_max: {grid.omega_max:.15g}")
    print(f"re_chi_from_kk: {str(grid.re_from_kk).lower()}")
    print(f"tail_ok: {str(grid.tail_ok).lower()}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    return _validate(args)


if __name__ == "__main__":
    sys.exit(main())
