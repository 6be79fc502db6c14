"""Command-line wrapper: cwim-plots --out fig.png agg1.csv [agg2.csv ...]"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .render import PlotError, PlotSpec, render


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cwim-plots",
        description="Draw regret/reward curves from cwim aggregate CSVs.",
    )
    parser.add_argument("inputs", nargs="+", help="aggregate CSV files")
    parser.add_argument("--out", required=True, help="output image (png/svg/pdf)")
    parser.add_argument("--y", choices=("cum_regret", "reward"), default="cum_regret")
    parser.add_argument("--title", default="")
    parser.add_argument("--xlabel", default="round")
    parser.add_argument("--ylabel", default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        spec = PlotSpec(
            inputs=tuple(args.inputs),
            output=args.out,
            y=args.y,
            title=args.title,
            xlabel=args.xlabel,
            ylabel=args.ylabel,
        )
        curves = render(spec)
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}: {len(curves)} curves, {len(curves[0].t)} points each")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
