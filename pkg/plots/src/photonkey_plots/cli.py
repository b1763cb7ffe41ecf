"""photonkey-plot: render harness CSVs into publication-style figures.

    photonkey-plot fig1  --in curves.csv --out fig1.svg [--bits]
    photonkey-plot sweep --in sweep.csv  --out sweep.svg [--bits]

Exit codes: 0 success, 1 usage error, 2 bad input data (missing curve or
schema mismatch).
"""
from __future__ import annotations

import argparse
import sys

from .figures import plot_fig1, plot_sweep
from .io import SchemaError

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> _Parser:
    parser = _Parser(prog="photonkey-plot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("fig1", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--in", dest="input", required=True, help="harness CSV")
        p.add_argument("--out", dest="output", required=True, help="image path (.svg/.pdf)")
        p.add_argument("--bits", action="store_true", help="plot bits/photon instead of nats")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "fig1":
            plot_fig1(args.input, args.output, bits=args.bits)
        else:
            plot_sweep(args.input, args.output, bits=args.bits)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
