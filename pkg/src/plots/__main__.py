"""Command line entry point: python -m plots <figure-spec.json> --out fig.png"""

from __future__ import annotations

import argparse
import sys

from plots import PlotError, load_figure_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m plots",
        description="Render one figure panel from a figure-spec JSON file.")
    parser.add_argument("spec", help="path to the figure-spec JSON document")
    parser.add_argument("--out", default="fig.png",
                        help="output image path (default: fig.png)")
    args = parser.parse_args(argv)
    try:
        spec = load_figure_spec(args.spec)
        out = render(spec, args.out)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
