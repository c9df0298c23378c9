"""Command-line entry point.

Exit status: 0 on success, 1 for invalid input (bad config, parameters or
incompatible runs), 2 when a run fails part-way (positivity loss, step-size
guard, majorant violation).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .config import parse_config, dump_config, schema_text
from .errors import (
    ConfigError,
    IncompatibleRunsError,
    LinBoltzError,
    ParameterError,
)
from .harness import build_info, cmd_compare, cmd_run, cmd_sweep, print_params

log = logging.getLogger("linboltz")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _scenario(args):
    scn = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        scn = scn.replace(dsmc__seed=args.seed)
    return scn


def _out(args, text: str) -> None:
    if not args.quiet:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _run(kind):
    def handler(args):
        scn = _scenario(args)
        _out(args, cmd_run(kind, scn, args.out, threads=args.threads))
        return EXIT_OK
    return handler


def _compare(args):
    report = cmd_compare(args.run_a, args.run_b, out=args.out)
    _out(args, report.text())
    return EXIT_OK


def _sweep(args):
    scn = _scenario(args)
    res = cmd_sweep(scn, args.axis, args.values, kind=args.solver, out=args.out, threads=args.threads)
    _out(args, res.text())
    return EXIT_OK


def _print_params(args):
    _out(args, print_params(_scenario(args)))
    return EXIT_OK


def _print_schema(args):
    _out(args, schema_text())
    return EXIT_OK


def _print_config(args):
    _out(args, dump_config(_scenario(args), build_info()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linboltz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"linboltz {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress stdout summaries")
    common.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in ("dsmc", "euler", "odes"):
        p = sub.add_parser(f"run-{kind}", parents=[common], help=f"run the {kind} solver")
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True, help="run directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override dsmc.seed")
        p.add_argument("--threads", type=int, default=1)
        p.set_defaults(func=_run(kind))

    p = sub.add_parser("compare", parents=[common], help="error norms between two run directories")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--out", default=None, help="CSV of per-snapshot norms")
    p.set_defaults(func=_compare)

    p = sub.add_parser("sweep", parents=[common], help="convergence sweep along one axis")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=["dt", "n_particles", "n_cells", "lambda"])
    p.add_argument("--values", required=True, type=float, nargs="+")
    p.add_argument("--solver", choices=["dsmc", "euler", "odes"], default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1, help="parallel runs")
    p.set_defaults(func=_sweep)

    for name, func, hlp in (
        ("print-params", _print_params, "derived coefficients, equilibrium and rates"),
        ("print-config", _print_config, "fully resolved configuration"),
    ):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("print-schema", parents=[common], help="all configuration keys and defaults")
    p.set_defaults(func=_print_schema)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_INVALID
    except (ParameterError, IncompatibleRunsError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    except LinBoltzError as exc:
        sys.stderr.write(f"run failed: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
