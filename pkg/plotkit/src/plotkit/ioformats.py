"""Readers for the artifact formats the simulation CLI emits.

The renderer deliberately consumes files rather than importing the
simulation package: a column-labeled CSV with one leading ``# units:``
comment, and the ``.vbg`` grid container (a single JSON header line
followed by a raw little-endian float64 or interleaved complex128
payload, row-major, axes listed as ordered [name, values] pairs).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

GRID_FORMAT = "vbloch-grid"
GRID_VERSIONS = ("1",)

_ELEMENT_DTYPES = {
    "complex128": np.dtype("<c16"),
    "float64": np.dtype("<f8"),
}


class PlotDataError(ValueError):
    """Raised when an input file cannot be plotted as requested."""


@dataclass
class Table:
    """One parsed CSV: column names and float data, comments dropped."""

    columns: tuple
    data: np.ndarray

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise PlotDataError(
                f"missing column {name!r}; file has {', '.join(self.columns)}")
        return self.data[:, self.columns.index(name)]


def read_table(path: str) -> Table:
    """Parse a CSV artifact, skipping leading ``#`` comment lines."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh)
                    if r and not r[0].lstrip().startswith("#")]
    except OSError as err:
        raise PlotDataError(f"cannot read {path}: {err}") from err
    if not rows:
        raise PlotDataError(f"{path} has no header row")
    header = tuple(c.strip() for c in rows[0])
    body = rows[1:]
    if not body:
        raise PlotDataError(f"{path} has no data rows")
    try:
        data = np.array([[float(cell) for cell in row] for row in body])
    except ValueError as err:
        raise PlotDataError(f"{path} has a non-numeric cell: {err}") from err
    if data.shape[1] != len(header):
        raise PlotDataError(
            f"{path} rows have {data.shape[1]} cells but the header "
            f"names {len(header)} columns")
    return Table(columns=header, data=data)


@dataclass
class Grid:
    """One parsed ``.vbg`` grid: values plus ordered named axes."""

    values: np.ndarray
    kind: str
    axes: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def axis(self, dim: int) -> np.ndarray:
        name = list(self.axes)[dim]
        return self.axes[name]

    def axis_label(self, dim: int) -> str:
        name = list(self.axes)[dim]
        unit = self.units.get(name, "")
        return f"{name} ({unit})" if unit else name


def read_grid(path: str) -> Grid:
    """Parse and validate one grid artifact."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as err:
        raise PlotDataError(f"cannot read {path}: {err}") from err

    newline = raw.find(b"\n")
    if newline < 0:
        raise PlotDataError(f"{path}: no header line found")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise PlotDataError(f"{path}: malformed header: {err}") from err

    if header.get("format") != GRID_FORMAT:
        raise PlotDataError(
            f"{path}: not a {GRID_FORMAT} file "
            f"(format tag {header.get('format')!r})")
    version = header.get("version")
    if version not in GRID_VERSIONS:
        raise PlotDataError(
            f"{path}: unsupported schema version {version!r}; "
            f"supported versions: {', '.join(GRID_VERSIONS)}")
    element = header.get("element")
    if element not in _ELEMENT_DTYPES:
        raise PlotDataError(f"{path}: unknown element type {element!r}")

    dtype = _ELEMENT_DTYPES[element]
    shape = tuple(int(n) for n in header.get("shape", []))
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize \
        if shape else 0
    payload = raw[newline + 1:]
    if len(payload) != expected:
        raise PlotDataError(
            f"{path}: payload is {len(payload)} bytes but shape "
            f"{list(shape)} of {element} needs {expected}")

    axes = {str(name): np.array(vals, dtype=float)
            for name, vals in header.get("axes", [])}
    for dim, (name, ax) in enumerate(axes.items()):
        if dim < len(shape) and ax.size != shape[dim]:
            raise PlotDataError(
                f"{path}: axis {name!r} has {ax.size} points but "
                f"dimension {dim} has {shape[dim]}")
    values = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return Grid(values=values, kind=str(header.get("kind", "")), axes=axes,
                units=dict(header.get("units", {})),
                meta=dict(header.get("meta", {})))
