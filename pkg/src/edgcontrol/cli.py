"""Command-line entry point: ``edg-control convergence|single``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .solver import SolverError
from .study import (
    BUILTIN_CASE,
    ConfigError,
    RunConfig,
    _parse_levels,
    format_summary,
    read_config_file,
    run_convergence_study,
    run_single,
)

logger = logging.getLogger("edgcontrol")


def _common(parser):
    parser.add_argument("--k", type=int, default=None, help="polynomial degree (1-4)")
    parser.add_argument("--gamma", type=float, default=None, help="Tikhonov weight (default 1)")
    parser.add_argument("--case", default=BUILTIN_CASE,
                        help=f"'{BUILTIN_CASE}' or a key=value config file")
    parser.add_argument("--stab", choices=("global", "local"), default=None,
                        help="stabilization scale: global h or element diameter")
    parser.add_argument("--quad-bump", action="store_true",
                        help="raise every quadrature exactness by 2")
    parser.add_argument("--out", default=None, help="output file (default stdout)")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="edg-control",
        description="EDG solver for distributed optimal control of the Poisson equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", help="run a refinement study")
    _common(conv)
    conv.add_argument("--levels", default=None,
                      help="comma-separated subdivisions, e.g. 8,16,32 (default 8,...,128)")
    conv.add_argument("--format", choices=("csv", "table"), default="csv")

    single = sub.add_parser("single", help="solve on one mesh and print key=value lines")
    _common(single)
    single.add_argument("--n", type=int, required=True, help="subdivisions per side")
    return parser


def config_from_args(args) -> RunConfig:
    values = {}
    if args.case != BUILTIN_CASE:
        path = Path(args.case)
        if not path.is_file():
            raise ConfigError(f"case must be {BUILTIN_CASE!r} or an existing config file")
        values.update(read_config_file(path))
    for name in ("k", "gamma", "stab"):
        if getattr(args, name) is not None:
            values[name] = getattr(args, name)
    if getattr(args, "levels", None):
        values["levels"] = _parse_levels(args.levels)
    if getattr(args, "format", None):
        values["format"] = args.format
    if args.quad_bump:
        values["quad_bump"] = True
    values["out"] = args.out
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in values.items() if k in known})


def _write(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except (ConfigError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"edg-control: error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "convergence":
            record = run_convergence_study(config)
            text = record.to_csv() if config.format == "csv" else record.to_table()
        else:
            text = format_summary(run_single(config, args.n))
    except (SolverError, ValueError) as exc:
        print(f"edg-control: solver failure: {exc}", file=sys.stderr)
        return 1
    _write(text, config.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
