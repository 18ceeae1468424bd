"""Peak analysis and pulse-area control maps for 2D spectra.

The rephasing spectrum of the V system carries four peaks: two diagonal
(P1 at the lower transition, P4 at the upper) and two cross peaks (P2, P3)
from pathways that absorb on one transition and emit on the other.  This
module locates them in windowed searches, converts their intensities to
visibility percentages, and drives area-control studies: grid searches
over the first three pulse areas and phase/intensity maps along a single
swept area.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .core import SystemParams
from .obe import DEFAULT_OPTIONS, SolverOptions
from .twodcs import (
    DEFAULT_SCHEME,
    DelayGrid,
    PhaseCycleScheme,
    Spectrum2D,
    _scan_fingerprint,
    scan_rephasing,
    spectrum_2d,
)

PEAK_LABELS = ("P1", "P2", "P3", "P4")


class VisibilityError(ValueError):
    """Raised when peak visibility is requested for an all-zero spectrum."""


@dataclass
class PeakRecord:
    """One located peak: window, maximum, and the phase at the maximum bin."""

    label: str
    expected_center: tuple
    found_center: tuple
    max_amplitude: float
    phase_at_max: float
    window_halfwidth: float


def expected_peak_centers(params: SystemParams) -> dict:
    """Carrier-relative (omega_tau, omega_t) coordinates of the four peaks.

    The retained signal component evolves conjugately during tau, so the
    absorption coordinate is the negated transition detuning: 0 for the
    lower transition, -delta for the upper.
    """
    d = params.delta
    return {
        "P1": (0.0, 0.0),
        "P2": (0.0, d),
        "P3": (-d, 0.0),
        "P4": (-d, d),
    }


def locate_peaks(spec: Spectrum2D, params: SystemParams,
                 window_halfwidth: float | None = None) -> list[PeakRecord]:
    """Windowed maxima of |S| at the four expected peak positions.

    Searches a square window (half-width delta / 3 unless overridden)
    around each expected center and records the maximum amplitude, its
    bin coordinates, and the complex phase at that bin.
    """
    if window_halfwidth is None:
        window_halfwidth = params.delta / 3.0
    if window_halfwidth <= 0.0:
        raise ValueError("window_halfwidth must be positive")
    if 2.0 * window_halfwidth >= params.delta:
        raise ValueError(
            f"peak windows of half-width {window_halfwidth:g} meV overlap at "
            f"a splitting of {params.delta:g} meV")

    amp = np.abs(spec.values)
    records = []
    for label, (c_tau, c_t) in expected_peak_centers(params).items():
        in_tau = np.abs(spec.omega_tau_axis - c_tau) <= window_halfwidth
        in_t = np.abs(spec.omega_t_axis - c_t) <= window_halfwidth
        if not (in_tau.any() and in_t.any()):
            raise ValueError(
                f"spectrum axes do not cover the {label} window at "
                f"({c_tau:g}, {c_t:g}) meV")
        ti = np.nonzero(in_tau)[0]
        tj = np.nonzero(in_t)[0]
        sub = amp[np.ix_(ti, tj)]
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        bi, bj = ti[i], tj[j]
        phase = float(np.angle(spec.values[bi, bj]))
        if phase <= -math.pi:
            phase += 2.0 * math.pi
        records.append(PeakRecord(
            label=label,
            expected_center=(c_tau, c_t),
            found_center=(float(spec.omega_tau_axis[bi]),
                          float(spec.omega_t_axis[bj])),
            max_amplitude=float(amp[bi, bj]),
            phase_at_max=phase,
            window_halfwidth=float(window_halfwidth),
        ))
    return records


def peak_visibility(peaks) -> np.ndarray:
    """Percentage visibility of each peak: 100 A_i^2 / sum_j A_j^2."""
    amps = np.array([p.max_amplitude for p in peaks], dtype=float)
    total = float(np.sum(amps**2))
    if total == 0.0:
        raise VisibilityError("every peak amplitude is zero; "
                              "visibility is undefined")
    return 100.0 * amps**2 / total


def unwrap_phases(phases) -> np.ndarray:
    """Nearest-branch phase continuation along an ordered sequence.

    Each point takes the 2 pi branch closest to its predecessor; a jump of
    exactly pi is kept as given (both branches are equally near).
    """
    return np.unwrap(np.asarray(phases, dtype=float))


def _peak_line(theta1_grid, fixed_areas, grid, fwhm, params, opts, scheme,
               detection, zero_pad_factor, window_rate, window_halfwidth,
               progress_callback):
    """Amplitude and phase of all four peaks at each swept first-pulse area."""
    theta1_grid = np.asarray(theta1_grid, dtype=float)
    if theta1_grid.size == 0:
        raise ValueError("theta1_grid must be nonempty")
    amps = np.empty((theta1_grid.size, 4))
    phases = np.empty((theta1_grid.size, 4))
    for i, a1 in enumerate(theta1_grid):
        tgrid = scan_rephasing(grid, (float(a1),) + tuple(fixed_areas), fwhm,
                               params, opts, scheme, detection)
        peaks = locate_peaks(spectrum_2d(tgrid, zero_pad_factor, window_rate),
                             params, window_halfwidth)
        amps[i] = [p.max_amplitude for p in peaks]
        phases[i] = [p.phase_at_max for p in peaks]
        if progress_callback is not None:
            progress_callback(i + 1, theta1_grid.size)
    return amps, phases


@dataclass
class Theta1ScanResult:
    """Per-peak maximum amplitude and phase versus the first pulse area."""

    theta1: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    labels: tuple = PEAK_LABELS


def theta1_scan(theta1_grid, grid: DelayGrid, fwhm: float,
                params: SystemParams, opts: SolverOptions = DEFAULT_OPTIONS,
                scheme: PhaseCycleScheme = DEFAULT_SCHEME,
                fixed_area: float = 0.1 * math.pi,
                detection: str = "population", zero_pad_factor: int = 2,
                window_rate: float | None = None,
                window_halfwidth: float | None = None,
                progress_callback=None) -> Theta1ScanResult:
    """Peak amplitudes versus the first pulse area at weak later pulses.

    Computes one spectrum per swept area with pulses 2-4 held at
    ``fixed_area`` and returns the windowed maximum amplitude of each of
    the four peaks.
    """
    theta1_grid = np.asarray(theta1_grid, dtype=float)
    amps, phases = _peak_line(theta1_grid, (fixed_area,) * 3, grid, fwhm,
                              params, opts, scheme, detection,
                              zero_pad_factor, window_rate,
                              window_halfwidth, progress_callback)
    return Theta1ScanResult(theta1=theta1_grid.copy(), amplitudes=amps,
                            phases=phases)


@dataclass
class PhaseMapResult:
    """Intensity-filtered points of one peak along a first-area sweep."""

    label: str
    theta1: np.ndarray
    intensity: np.ndarray
    phase: np.ndarray
    threshold: float
    phase_span: float
    note: str = ""


def phase_map(peak_label: str, theta1_grid, theta2: float, theta3: float,
              threshold: float, grid: DelayGrid, fwhm: float,
              params: SystemParams, opts: SolverOptions = DEFAULT_OPTIONS,
              scheme: PhaseCycleScheme = DEFAULT_SCHEME,
              theta4: float = 0.1 * math.pi, detection: str = "population",
              zero_pad_factor: int = 2,
              window_rate: float | None = None,
              window_halfwidth: float | None = None,
              progress_callback=None) -> PhaseMapResult:
    """Unwrapped phase of one peak along a first-area sweep, bright points only.

    Sweeps the first pulse area with the others fixed, unwraps the peak's
    phase along the full sweep so branch continuity survives dim stretches,
    and then keeps the points whose peak intensity reaches ``threshold`` of
    the line's maximum.  An empty selection returns an empty result carrying
    a diagnostic note rather than raising.
    """
    if peak_label not in PEAK_LABELS:
        raise ValueError(f"peak_label must be one of {PEAK_LABELS}")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    theta1_grid = np.asarray(theta1_grid, dtype=float)
    amps, phases = _peak_line(theta1_grid, (theta2, theta3, theta4), grid,
                              fwhm, params, opts, scheme, detection,
                              zero_pad_factor, window_rate,
                              window_halfwidth, progress_callback)
    col = PEAK_LABELS.index(peak_label)
    intensity = amps[:, col] ** 2
    top = float(intensity.max())
    keep = intensity >= threshold * top if top > 0.0 else np.zeros(
        intensity.size, dtype=bool)

    note = ""
    if not keep.any():
        note = (f"no {peak_label} point reaches {threshold:g} of the line "
                f"maximum {top:g}")
    unwrapped = unwrap_phases(phases[:, col])[keep]
    span = float(unwrapped.max() - unwrapped.min()) if unwrapped.size else 0.0
    return PhaseMapResult(label=peak_label, theta1=theta1_grid[keep],
                          intensity=intensity[keep], phase=unwrapped,
                          threshold=float(threshold), phase_span=span,
                          note=note)


@dataclass
class ControlSearchResult:
    """Peak response over a grid of the first three pulse areas.

    One row per (theta1, theta2, theta3) triple: per-peak intensity
    (squared maximum amplitude), phase at the maximum, and visibility.
    """

    thetas: np.ndarray        # (n, 3) rad
    intensities: np.ndarray   # (n, 4)
    phases: np.ndarray        # (n, 4) rad
    visibilities: np.ndarray  # (n, 4) percent
    theta4: float
    labels: tuple = PEAK_LABELS
    meta: dict = field(default_factory=dict)

    def best_triples(self) -> dict:
        """Per peak, the area triple with the highest visibility."""
        out = {}
        for k, label in enumerate(self.labels):
            i = int(np.argmax(self.visibilities[:, k]))
            out[label] = (tuple(self.thetas[i]),
                          float(self.visibilities[i, k]))
        return out


_CONTROL_HEADER = ["index", "theta1_pi", "theta2_pi", "theta3_pi"]
for _label in PEAK_LABELS:
    _CONTROL_HEADER += [f"I_{_label}", f"phase_{_label}_rad",
                        f"PV_{_label}_pct"]


def _control_fingerprint(theta_grids, theta4, grid, fwhm, params, opts,
                         scheme, detection, zero_pad_factor, window_rate):
    base = _scan_fingerprint(grid, (0.0, 0.0, 0.0, theta4), fwhm, params,
                             opts, scheme, detection)
    base["kind"] = "control_search"
    base["theta_grids"] = [list(map(float, g)) for g in theta_grids]
    base["zero_pad_factor"] = int(zero_pad_factor)
    base["window_rate"] = None if window_rate is None else float(window_rate)
    del base["areas"]
    return base


def control_search(theta1_grid, theta2_grid, theta3_grid,
                   theta4: float = 0.1 * math.pi, *, grid: DelayGrid,
                   fwhm: float, params: SystemParams,
                   opts: SolverOptions = DEFAULT_OPTIONS,
                   scheme: PhaseCycleScheme = DEFAULT_SCHEME,
                   detection: str = "population", zero_pad_factor: int = 2,
                   window_rate: float | None = None,
                   window_halfwidth: float | None = None, budget: int = 512,
                   out_path: str | None = None, resume: bool = False,
                   progress_callback=None) -> ControlSearchResult:
    """Peak intensities, phases, and visibilities over an area-triple grid.

    Computes a full spectrum per (theta1, theta2, theta3) combination with
    the last pulse fixed at ``theta4``.  The total number of spectra must
    not exceed ``budget``; otherwise the search refuses to start and
    reports the required count.  With ``out_path`` every finished row is
    appended to a CSV (with a JSON sidecar describing the grid), and
    ``resume=True`` skips rows already present in a matching file.
    """
    grids = [np.asarray(g, dtype=float) for g in
             (theta1_grid, theta2_grid, theta3_grid)]
    for name, g in zip(("theta1", "theta2", "theta3"), grids):
        if g.size == 0:
            raise ValueError(f"{name}_grid must be nonempty")
        if g.min() < 0.0 or g.max() > 4.0 * math.pi:
            raise ValueError(f"{name}_grid must lie within [0, 4 pi]")
    if theta4 < 0.0:
        raise ValueError("theta4 must be nonnegative")
    n_total = grids[0].size * grids[1].size * grids[2].size
    if n_total > budget:
        raise ValueError(
            f"search needs {n_total} spectra but the budget allows {budget}; "
            "raise the budget or thin the grids")

    fingerprint = _control_fingerprint(grids, theta4, grid, fwhm, params,
                                       opts, scheme, detection,
                                       zero_pad_factor, window_rate)
    done: dict[int, list] = {}
    writer = None
    csv_file = None
    if out_path is not None:
        sidecar = out_path + ".meta.json"
        if resume and os.path.exists(out_path):
            if not os.path.exists(sidecar):
                raise ValueError(
                    f"{out_path} has no {sidecar} sidecar; cannot verify it "
                    "belongs to this search configuration")
            with open(sidecar, encoding="utf-8") as fh:
                stored = json.load(fh)["fingerprint"]
            if (json.dumps(stored, sort_keys=True)
                    != json.dumps(fingerprint, sort_keys=True)):
                raise ValueError(
                    f"{out_path} belongs to a different search configuration")
            with open(out_path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    try:
                        parsed = [float(row[c]) for c in _CONTROL_HEADER[1:]]
                        done[int(row["index"])] = parsed
                    except (KeyError, TypeError, ValueError):
                        continue  # torn row from an interrupted write
            csv_file = open(out_path, "a", newline="", encoding="utf-8")
            writer = csv.writer(csv_file)
        else:
            with open(sidecar, "w", encoding="utf-8") as fh:
                json.dump({"format": "control-search", "version": 1,
                           "columns": _CONTROL_HEADER,
                           "fingerprint": fingerprint}, fh, indent=1)
            csv_file = open(out_path, "w", newline="", encoding="utf-8")
            writer = csv.writer(csv_file)
            writer.writerow(_CONTROL_HEADER)
            csv_file.flush()

    rows = []
    try:
        for idx, (a1, a2, a3) in enumerate(product(*grids)):
            if idx in done:
                rows.append(done[idx])
                continue
            tgrid = scan_rephasing(grid, (a1, a2, a3, theta4), fwhm, params,
                                   opts, scheme, detection)
            peaks = locate_peaks(spectrum_2d(tgrid, zero_pad_factor,
                                             window_rate), params,
                                 window_halfwidth)
            pv = peak_visibility(peaks)
            row = [float(a1) / math.pi, float(a2) / math.pi,
                   float(a3) / math.pi]
            for p, v in zip(peaks, pv):
                row += [p.max_amplitude**2, p.phase_at_max, float(v)]
            rows.append(row)
            if writer is not None:
                writer.writerow([idx] + [repr(x) for x in row])
                csv_file.flush()
            if progress_callback is not None:
                progress_callback(len(rows), n_total)
    finally:
        if csv_file is not None:
            csv_file.close()

    if out_path is not None:
        # canonical rewrite: rows in index order, torn fragments dropped,
        # so a resumed run leaves the same bytes as an uninterrupted one
        tmp = out_path + ".tmp"
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CONTROL_HEADER)
            for idx, row in enumerate(rows):
                writer.writerow([idx] + [repr(x) for x in row])
        os.replace(tmp, out_path)

    table = np.array(rows, dtype=float)
    return ControlSearchResult(
        thetas=table[:, :3] * math.pi,
        intensities=table[:, 3::3],
        phases=table[:, 4::3],
        visibilities=table[:, 5::3],
        theta4=float(theta4),
        meta={"fingerprint": fingerprint, "out_path": out_path},
    )
