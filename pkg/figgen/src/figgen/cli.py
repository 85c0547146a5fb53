"""Command line entry point: figgen <kind> --in <csv...> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .readers import SchemaError


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi, got {text!r}"
        )
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from exc
    return (lo, hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figgen",
        description="Render figures from simulation CSV outputs.",
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind to render")
    parser.add_argument(
        "--in",
        dest="inputs",
        nargs="+",
        required=True,
        metavar="CSV",
        help="input CSV file(s); meanR takes an optional second field-trace CSV",
    )
    parser.add_argument("--out", required=True, metavar="IMG", help="output image path")
    parser.add_argument(
        "--xlim", type=_parse_range, default=None, metavar="LO:HI",
        help="x-axis range in display units",
    )
    parser.add_argument(
        "--ylim", type=_parse_range, default=None, metavar="LO:HI",
        help="y-axis range in display units",
    )
    parser.add_argument("--dpi", type=int, default=150, help="output resolution")
    parser.add_argument("--title", default=None, help="optional figure title")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            inputs=tuple(args.inputs),
            output=args.out,
            xlim=args.xlim,
            ylim=args.ylim,
            dpi=args.dpi,
            title=args.title,
        )
        out = render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"figgen: error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
