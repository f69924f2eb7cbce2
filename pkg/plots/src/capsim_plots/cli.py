"""Command line: capsim-plot plot --csv rows.csv --spec spec.json --out fig.svg

The spec may carry default csv/out paths; the flags override them.
Vector output (SVG) is the default; name the output .png for raster.
"""

from __future__ import annotations

import argparse
import sys

from .plotting import PlotSpec, PlotSpecError, plot_band


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capsim-plot",
                                     description="Band charts over experiment CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render a band chart from a CSV")
    p.add_argument("--csv", default=None, help="input CSV (harness schema)")
    p.add_argument("--spec", required=True, help="JSON plot spec")
    p.add_argument("--out", default=None, help="output image path (.svg or .png)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec.load(args.spec)
        csv_path = args.csv or spec.csv
        out_path = args.out or spec.out
        if not csv_path:
            raise PlotSpecError("no input CSV: pass --csv or set spec.csv")
        if not out_path:
            raise PlotSpecError("no output path: pass --out or set spec.out")
        written = plot_band(spec, csv_path, out_path)
    except (PlotSpecError, OSError) as exc:
        print(f"capsim-plot: error: {exc}", file=sys.stderr)
        return 2
    print(written)
    return 0


if __name__ == "__main__":
    sys.exit(main())
