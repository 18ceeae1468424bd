"""Figure builders for sweep curves, 2D spectra, and control searches.

Figures are built directly on :class:`matplotlib.figure.Figure` objects,
never through the pyplot state machine, so rendering is deterministic
and needs no GUI backend.  Phase is always drawn as hue (0 = red,
increasing counterclockwise around the color wheel) and amplitude as
saturation; every phase-colored figure carries that legend since the
mapping is a convention of this package.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from matplotlib import colors as mcolors
from matplotlib.figure import Figure

from .ioformats import Grid, PlotDataError, read_grid, read_table

NORMALIZATIONS = ("per-spectrum", "global-max")
HUE_LEGEND = ("hue: phase (0 = red, increasing counterclockwise), "
              "saturation: amplitude")

SWEEP_X = "theta_over_pi"
SWEEP_SERIES = ("pop0", "pop1", "pop2", "coh01", "coh02", "coh12")
AREA_SCAN_X = "theta1_over_pi"
AREA_SCAN_SERIES = ("amp_P1", "amp_P2", "amp_P3", "amp_P4")


@dataclass
class PlotSpec:
    """What to render: inputs, kind, color mapping, and output target.

    ``normalization`` selects per-panel or shared amplitude scaling and
    is recorded in the written image's metadata.  ``color`` chooses a
    plain amplitude map or the hue-saturation phase mapping.
    """

    inputs: tuple = ()
    kind: str = ""
    normalization: str = "per-spectrum"
    color: str = "amplitude"
    threshold: float = 0.7
    peak: str = "P4"
    out_path: str = ""

    def __post_init__(self):
        self.inputs = tuple(self.inputs)
        if self.normalization not in NORMALIZATIONS:
            raise PlotDataError(
                f"normalization must be one of {NORMALIZATIONS}, "
                f"got {self.normalization!r}")
        if self.normalization == "global-max" and not self.inputs:
            raise PlotDataError(
                "global-max normalization needs at least one input")
        if not 0.0 < self.threshold <= 1.0:
            raise PlotDataError("threshold must lie in (0, 1]")


def _metadata(spec: PlotSpec) -> dict:
    return {"normalization": spec.normalization}


def save_figure(fig: Figure, path: str) -> None:
    """Write a figure as PNG, embedding its attached metadata."""
    fig.savefig(path, format="png", dpi=120,
                metadata=getattr(fig, "artifact_metadata", {}))


def _phase_colors(phase: np.ndarray, saturation: np.ndarray) -> np.ndarray:
    """RGB array with hue from phase and saturation from amplitude."""
    hue = np.mod(np.asarray(phase, dtype=float), 2.0 * np.pi) / (2.0 * np.pi)
    sat = np.clip(np.asarray(saturation, dtype=float), 0.0, 1.0)
    hsv = np.stack([hue, sat, np.ones_like(hue)], axis=-1)
    return mcolors.hsv_to_rgb(hsv)


def plot_curves(path: str, spec: PlotSpec) -> Figure:
    """Line plot of a pulse-area sweep or first-area scan CSV."""
    table = read_table(path)
    first = table.columns[0] if table.columns else ""
    if first == SWEEP_X:
        series = SWEEP_SERIES
    elif first == AREA_SCAN_X:
        series = AREA_SCAN_SERIES
    else:
        raise PlotDataError(
            f"{path}: first column {first!r} is neither {SWEEP_X!r} nor "
            f"{AREA_SCAN_X!r}")
    x = table.column(first)
    fig = Figure(figsize=(7.0, 4.4))
    ax = fig.add_subplot()
    for name in series:
        ax.plot(x, table.column(name), label=name, linewidth=1.4)
    ax.set_xlabel("Pulse area (π)")
    ax.set_ylabel("amplitude")
    ax.legend(loc="upper right", fontsize=8, ncols=2)
    ax.grid(True, alpha=0.25)
    fig.artifact_metadata = _metadata(spec)
    return fig


def _spectrum_panel(ax, grid: Grid, norm: float, spec: PlotSpec) -> None:
    if grid.values.ndim != 2:
        raise PlotDataError(
            f"spectrum grids must be 2-d, got {grid.values.ndim} dimensions")
    amp = np.abs(grid.values)
    y = grid.axis(0)
    x = grid.axis(1)
    extent = (float(x[0]), float(x[-1]), float(y[0]), float(y[-1]))
    if spec.color == "phase":
        rgb = _phase_colors(np.angle(grid.values), amp / norm)
        ax.imshow(rgb, origin="lower", extent=extent, aspect="auto")
    else:
        levels = np.linspace(0.0, 1.0, 41)
        ax.contourf(x, y, amp / norm, levels=levels, cmap="viridis")
    ax.set_xlabel(grid.axis_label(1))
    ax.set_ylabel(grid.axis_label(0))


def plot_spectrum(paths, spec: PlotSpec) -> Figure:
    """Amplitude contour maps, or hue-saturation maps in phase mode.

    One panel per input grid.  The absorption axis keeps its negative
    values as stored; per-spectrum normalization scales each panel by
    its own maximum, global-max by the largest amplitude of all panels.
    """
    paths = list(paths)
    if not paths:
        raise PlotDataError("plot_spectrum needs at least one grid file")
    grids = [read_grid(p) for p in paths]
    maxima = [float(np.abs(g.values).max()) for g in grids]
    global_norm = max(max(maxima), 1e-300)

    fig = Figure(figsize=(4.6 * len(grids), 4.2))
    for k, grid in enumerate(grids):
        ax = fig.add_subplot(1, len(grids), k + 1)
        norm = global_norm if spec.normalization == "global-max" \
            else max(maxima[k], 1e-300)
        _spectrum_panel(ax, grid, norm, spec)
    if spec.color == "phase":
        fig.suptitle(HUE_LEGEND, fontsize=8)
    fig.artifact_metadata = _metadata(spec)
    return fig


def plot_phase_scatter(path: str, spec: PlotSpec) -> Figure:
    """3D scatter of a control search: hue = peak phase, saturation = intensity.

    Keeps the rows whose target-peak intensity reaches ``spec.threshold``
    of the file's maximum.  An empty selection draws an empty set of
    axes and warns rather than failing, so batch rendering continues.
    """
    table = read_table(path)
    t1 = table.column("theta1_pi")
    t2 = table.column("theta2_pi")
    t3 = table.column("theta3_pi")
    inten = table.column(f"I_{spec.peak}")
    phase = table.column(f"phase_{spec.peak}_rad")

    top = float(inten.max())
    keep = inten >= spec.threshold * top if top > 0.0 \
        else np.zeros(inten.size, dtype=bool)

    fig = Figure(figsize=(6.4, 5.4))
    ax = fig.add_subplot(projection="3d")
    if keep.any():
        colors = _phase_colors(phase[keep], inten[keep] / top)
        ax.scatter(t1[keep], t2[keep], t3[keep], c=colors, s=36,
                   depthshade=False)
    else:
        warnings.warn(f"no {spec.peak} row reaches {spec.threshold:g} of "
                      f"the maximum intensity; figure is empty")
    ax.set_xlabel("Θ1 (π)")
    ax.set_ylabel("Θ2 (π)")
    ax.set_zlabel("Θ3 (π)")
    fig.suptitle(HUE_LEGEND, fontsize=8)
    fig.artifact_metadata = _metadata(spec)
    return fig
