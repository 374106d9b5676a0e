"""Command line entry: idslab-plot --kind ids --in ids.csv --out ids.svg"""

from __future__ import annotations

import argparse
import sys

from idslab_plot.render import KINDS, FigureJob, render
from idslab_plot.schemas import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idslab-plot", description="Render figures from idslab CSV outputs."
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument(
        "--in", dest="inputs", required=True, action="append", help="input CSV (repeatable)"
    )
    parser.add_argument("--out", required=True, help="output figure (.svg or .png)")
    parser.add_argument("--fit", help="fit report JSON (wegner kind)")
    parser.add_argument("--width", type=float, default=6.0)
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = FigureJob(
            kind=args.kind,
            inputs=tuple(args.inputs),
            output=args.out,
            fit_report=args.fit,
            style={"width": args.width, "dpi": args.dpi},
        )
        path = render(job)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
