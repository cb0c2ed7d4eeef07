"""Command line entry point: `sfpg-render <panel> --manifest run/manifest.json`."""

import argparse
import sys
from pathlib import Path

from .errors import FigureError
from .render import PANELS, FigureRecipe, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfpg-render",
        description="Render publication-style panels from sfpg exports")
    parser.add_argument("panel", choices=PANELS, metavar="panel",
                        help=f"one of: {', '.join(PANELS)}")
    parser.add_argument("--manifest", required=True,
                        help="manifest.json of a pipeline run")
    parser.add_argument("--overlay", action="append", default=[],
                        help="additional manifest for overlaid curves "
                             "(fig4c); repeatable")
    parser.add_argument("--out", help="output image path "
                                      "(default: <panel>.png)")
    parser.add_argument("--wavelength-nm", type=float, default=800.0,
                        help="pump wavelength used for guide lines")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    recipe = FigureRecipe(
        manifest=Path(args.manifest), panel=args.panel,
        output=Path(args.out) if args.out else Path(f"{args.panel}.png"),
        wavelength_nm=args.wavelength_nm,
        extra_manifests=tuple(Path(p) for p in args.overlay),
        dpi=args.dpi)
    try:
        out = render(recipe)
    except FigureError as exc:
        print(f"sfpg-render: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
