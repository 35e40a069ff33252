"""Command-line entry: `plots <kind> --in <csv> [--in <csv> ...] --out <png>`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from faris harness CSV outputs")
    ap.add_argument("kind", choices=KINDS, help="figure kind")
    ap.add_argument("--in", dest="inputs", action="append", required=True,
                    metavar="CSV", help="input CSV (repeatable for overlays)")
    ap.add_argument("--out", required=True, metavar="IMAGE",
                    help="output image path (png/pdf/svg by extension)")
    ap.add_argument("--label", dest="labels", action="append", default=[],
                    metavar="TEXT", help="series label, one per --in")
    ap.add_argument("--title", default="", help="figure title override")
    args = ap.parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind,
                          inputs=tuple(Path(p) for p in args.inputs),
                          output=Path(args.out),
                          labels=tuple(args.labels),
                          title=args.title)
        out = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
