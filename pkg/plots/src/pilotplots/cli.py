"""Command line figure renderer: ``pilotplot <kind> --in CSV... --out IMG``."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pilotplot",
        description="Render pilotsim result figures from summary/rate CSVs.")
    parser.add_argument("kind", choices=list(FIGURE_KINDS),
                        help="figure kind to render")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path "
                        "(format from the suffix: .png, .svg, .pdf, ...)")
    parser.add_argument("--net", action="store_true",
                        help="plot net rates (pilot-overhead prelog applied)")
    parser.add_argument("--ci", action="store_true",
                        help="add confidence-interval error bars to SER figures")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, inputs=tuple(args.inputs), output=args.out,
                      use_net=args.net, with_ci=args.ci)
    try:
        report = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{report.output}: {report.points_plotted} points over "
          f"{len(report.series_points)} series")
    return 0


if __name__ == "__main__":
    sys.exit(main())
