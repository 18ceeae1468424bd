"""Render pulse-area sweep and 2D coherent spectrum artifacts to figures.

This package consumes only the files the simulation CLI writes (sweep
and search CSVs, ``.vbg`` grid containers) and renders the standard
figures: pulse-area curves, amplitude contour spectra, hue-saturation
phase spectra, and 3D control-search scatters.
"""

from plotkit.ioformats import Grid, PlotDataError, Table, read_grid, \
    read_table
from plotkit.render import (
    HUE_LEGEND,
    NORMALIZATIONS,
    PlotSpec,
    plot_curves,
    plot_phase_scatter,
    plot_spectrum,
    save_figure,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "HUE_LEGEND",
    "NORMALIZATIONS",
    "PlotDataError",
    "PlotSpec",
    "Table",
    "plot_curves",
    "plot_phase_scatter",
    "plot_spectrum",
    "read_grid",
    "read_table",
    "save_figure",
    "__version__",
]
