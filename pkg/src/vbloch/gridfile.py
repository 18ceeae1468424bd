"""Binary grid container for 2D scan and spectrum data.

A grid file is a single JSON header line followed by the raw array
payload.  The header declares the schema version, the array shape and
element type, the axes with units, and the excitation record; the payload
is little-endian float64 data, with complex values stored as interleaved
(re, im) pairs, row-major with the tau axis slowest.  Writing the same
array twice produces identical bytes, so checksum comparisons across
checkpoint/resume cycles are meaningful.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

FORMAT_NAME = "vbloch-grid"
SUPPORTED_VERSIONS = ("1",)

_ELEMENT_DTYPES = {
    "complex128": np.dtype("<c16"),
    "float64": np.dtype("<f8"),
}


class GridFileError(IOError):
    """Raised when a grid file cannot be written, read, or validated."""


@dataclass
class GridFile:
    """In-memory form of one grid artifact: header dict plus values."""

    values: np.ndarray
    kind: str
    axes: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def element(self) -> str:
        return ("complex128" if np.iscomplexobj(self.values)
                else "float64")


def _header_dict(grid: GridFile) -> dict:
    # axes serialize as an ordered list of [name, values] pairs: the
    # position in the list is the array dimension, so sorting the JSON
    # keys for deterministic output cannot scramble the axis order
    return {
        "format": FORMAT_NAME,
        "version": SUPPORTED_VERSIONS[-1],
        "kind": grid.kind,
        "element": grid.element,
        "shape": list(grid.values.shape),
        "axes": [[k, list(map(float, v))] for k, v in grid.axes.items()],
        "units": dict(grid.units),
        "meta": grid.meta,
    }


def write_grid(path: str, grid: GridFile) -> None:
    """Serialize a grid to one JSON header line plus raw payload bytes."""
    dtype = _ELEMENT_DTYPES[grid.element]
    payload = np.ascontiguousarray(grid.values, dtype=dtype).tobytes()
    header = json.dumps(_header_dict(grid), sort_keys=True,
                        separators=(",", ":"))
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(header.encode("utf-8"))
            fh.write(b"\n")
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as err:
        raise GridFileError(f"cannot write grid file {path}: {err}") from err


def read_grid(path: str) -> GridFile:
    """Parse and validate a grid file written by :func:`write_grid`."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as err:
        raise GridFileError(f"cannot read grid file {path}: {err}") from err

    newline = raw.find(b"\n")
    if newline < 0:
        raise GridFileError(f"{path}: no header line found")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise GridFileError(f"{path}: malformed header: {err}") from err

    if header.get("format") != FORMAT_NAME:
        raise GridFileError(
            f"{path}: not a {FORMAT_NAME} file "
            f"(format tag {header.get('format')!r})")
    version = header.get("version")
    if version not in SUPPORTED_VERSIONS:
        raise GridFileError(
            f"{path}: unsupported schema version {version!r}; "
            f"supported versions: {', '.join(SUPPORTED_VERSIONS)}")
    element = header.get("element")
    if element not in _ELEMENT_DTYPES:
        raise GridFileError(f"{path}: unknown element type {element!r}")

    dtype = _ELEMENT_DTYPES[element]
    shape = tuple(int(n) for n in header.get("shape", []))
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if shape \
        else 0
    payload = raw[newline + 1:]
    if len(payload) != expected:
        raise GridFileError(
            f"{path}: truncated or padded payload: expected {expected} "
            f"bytes for shape {list(shape)} of {element}, got "
            f"{len(payload)}")

    values = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    axes_field = header.get("axes", [])
    if isinstance(axes_field, dict):
        pairs = axes_field.items()
    else:
        pairs = ((name, vals) for name, vals in axes_field)
    return GridFile(values=values, kind=header.get("kind", ""),
                    axes={k: np.array(v, dtype=float) for k, v in pairs},
                    units=header.get("units", {}),
                    meta=header.get("meta", {}))


def grid_csv_rows(grid: GridFile):
    """Long-format rows (one per grid node) for lossy CSV export.

    Yields a header naming each axis with its unit, then one row per
    element in storage order; complex data contributes separate real and
    imaginary columns.
    """
    axis_names = list(grid.axes)
    if len(axis_names) != grid.values.ndim:
        raise GridFileError(
            f"grid has {grid.values.ndim} dimensions but "
            f"{len(axis_names)} axes")
    cols = list(axis_names)
    if np.iscomplexobj(grid.values):
        cols += ["real", "imag"]
    else:
        cols += ["value"]
    yield cols
    axes = [grid.axes[n] for n in axis_names]
    for idx in np.ndindex(grid.values.shape):
        coords = [repr(float(ax[i])) for ax, i in zip(axes, idx)]
        v = grid.values[idx]
        if np.iscomplexobj(grid.values):
            yield coords + [repr(float(v.real)), repr(float(v.imag))]
        else:
            yield coords + [repr(float(v))]
