"""Command line entry point: render artifact files to PNG images."""

from __future__ import annotations

import argparse
import sys

from .ioformats import PlotDataError
from .render import (
    PlotSpec, plot_curves, plot_phase_scatter, plot_spectrum, save_figure,
)

KINDS = ("curves", "spectrum", "phase-spectrum", "phase-scatter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render sweep CSVs and 2D spectrum grids to figures.")
    parser.add_argument("kind", choices=KINDS,
                        help="figure kind to render")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="PATH", help="input artifact files")
    parser.add_argument("--out", required=True, metavar="PNG",
                        help="output image path")
    parser.add_argument("--global-norm", action="store_true",
                        help="normalize amplitudes across all inputs")
    parser.add_argument("--threshold", type=float, default=0.7,
                        metavar="F",
                        help="intensity cut for phase-scatter, as a "
                             "fraction of the maximum (default 0.7)")
    parser.add_argument("--peak", default="P4",
                        help="target peak for phase-scatter (default P4)")
    return parser


def run(args) -> int:
    spec = PlotSpec(
        inputs=tuple(args.inputs),
        kind=args.kind,
        normalization="global-max" if args.global_norm else "per-spectrum",
        color="phase" if args.kind == "phase-spectrum" else "amplitude",
        threshold=args.threshold,
        peak=args.peak,
        out_path=args.out,
    )
    if args.kind == "curves":
        if len(args.inputs) != 1:
            raise PlotDataError("curves renders exactly one CSV")
        fig = plot_curves(args.inputs[0], spec)
    elif args.kind in ("spectrum", "phase-spectrum"):
        fig = plot_spectrum(args.inputs, spec)
    else:
        if len(args.inputs) != 1:
            raise PlotDataError("phase-scatter renders exactly one CSV")
        fig = plot_phase_scatter(args.inputs[0], spec)
    save_figure(fig, args.out)
    print(args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except PlotDataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
