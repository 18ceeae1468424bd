"""Single-pulse excitation: analytic limits and pulse-area sweeps.

In the impulsive limit a resonant pulse couples the ground state to the
bright superposition (mu01 |1> + mu02 |2>) / mu_eff only, so the three-level
response is two-level Rabi flopping with the effective area
theta * mu_eff / mu01.  Finite-duration pulses depart from this limit once
the duration-splitting product fwhm * delta / h is no longer small; sweeping
the pulse area exposes that departure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Pulse, PulseSequence, SystemParams, ground_state
from .obe import (
    DEFAULT_OPTIONS,
    IntegrationError,
    SolverOptions,
    _apply_free,
    detection_epoch,
    evolve_many,
    pack_state,
    sequence_start,
)

__all__ = [
    "AreaSweepResult",
    "delta_pulse_oracle",
    "default_area_grid",
    "sweep_pulse_area",
    "oscillation_minima",
    "extract_rabi_period",
    "crossing_points",
]


def delta_pulse_oracle(
    theta: float, params: SystemParams, phase: float = 0.0
) -> np.ndarray:
    """Exact post-pulse density matrix for an instantaneous pulse of area theta.

    Starts from the ground state; decay and detuning are ignored during the
    (zero-length) pulse.  ``theta`` is defined against mu01, so the bright
    state rotates by theta * mu_eff / mu01.
    """
    mu_eff = params.mu_eff
    half = 0.5 * theta * mu_eff / params.mu01
    psi = np.array(
        [
            math.cos(half),
            1j * math.sin(half) * np.exp(-1j * phase) * params.mu01 / mu_eff,
            1j * math.sin(half) * np.exp(-1j * phase) * params.mu02 / mu_eff,
        ],
        dtype=complex,
    )
    return np.outer(psi, psi.conj())


def default_area_grid(step_pi: float = 0.01, max_pi: float = 2.5) -> np.ndarray:
    """Pulse-area grid [0, max_pi) pi in steps of step_pi pi (rad, end-exclusive)."""
    n = int(round(max_pi / step_pi))
    return np.arange(n) * (step_pi * math.pi)


@dataclass
class AreaSweepResult:
    """Density-matrix elements read out after one pulse, per swept area.

    ``states`` holds packed (rho00, rho11, rho22, rho01, rho02, rho12) rows.
    ``readout`` records the convention used: "epoch" values are the state at
    the detection epoch (pulse center + padding * fwhm), decay included;
    "center_referenced" values additionally have the center-to-epoch free
    factors (decay and frame rotation) divided back out, which makes them
    independent of the epoch choice.
    """

    areas: np.ndarray
    states: np.ndarray
    fwhm: float
    readout: str
    params: SystemParams

    @property
    def pop0(self) -> np.ndarray:
        return self.states[:, 0].real

    @property
    def pop1(self) -> np.ndarray:
        return self.states[:, 1].real

    @property
    def pop2(self) -> np.ndarray:
        return self.states[:, 2].real

    @property
    def coh01(self) -> np.ndarray:
        return np.abs(self.states[:, 3])

    @property
    def coh02(self) -> np.ndarray:
        return np.abs(self.states[:, 4])

    @property
    def coh12(self) -> np.ndarray:
        return np.abs(self.states[:, 5])


def sweep_pulse_area(
    areas: np.ndarray,
    fwhm: float,
    params: SystemParams,
    opts: SolverOptions = DEFAULT_OPTIONS,
    readout: str = "epoch",
    chunk: int = 64,
) -> AreaSweepResult:
    """Drive the ground state with one pulse per area and read the state out.

    All areas share the pulse shape, so they integrate as one stack with
    per-system amplitude factors (the equations are linear in the field for
    fixed shape).  Readout happens at the detection epoch (center + padding
    * fwhm); the "center_referenced" alternative inverts the exactly-known
    free-evolution factors from the pulse center to the epoch, making the
    result independent of the epoch choice.
    """
    if readout not in ("center_referenced", "epoch"):
        raise ValueError(f"unknown readout {readout!r}")
    areas = np.asarray(areas, dtype=float)
    if areas.size == 0:
        raise ValueError("areas must be non-empty")
    if areas.min() < 0.0:
        raise ValueError("areas must be non-negative")

    # unit-area reference pulse; each system scales it by its own area
    ref = Pulse(area=1.0, fwhm=fwhm, center=0.0)
    seq = PulseSequence.single(ref)
    t0 = sequence_start(seq, opts)
    epoch = detection_epoch(seq, opts)
    y_ground = pack_state(ground_state())

    rows = []
    for lo in range(0, areas.size, chunk):
        sub = areas[lo : lo + chunk]
        y0 = np.tile(y_ground, (sub.size, 1))
        factors = sub.astype(complex)[:, None]
        try:
            y_end, _ = evolve_many(y0, seq.pulses, factors, t0, epoch, params, opts)
        except IntegrationError:
            # rerun one area at a time to name the offender
            for a in sub:
                try:
                    evolve_many(y_ground[None, :], seq.pulses,
                                np.array([[a]], dtype=complex),
                                t0, epoch, params, opts)
                except IntegrationError as single:
                    raise IntegrationError(
                        f"pulse area {a / math.pi:.6g} pi: {single}"
                    ) from single
            raise
        rows.append(y_end)
    states = np.vstack(rows)
    if readout == "center_referenced":
        states = _apply_free(states, -(epoch - 0.0), params, opts)
    return AreaSweepResult(areas=areas, states=states, fwhm=fwhm,
                           readout=readout, params=params)


def oscillation_minima(
    x: np.ndarray,
    values: np.ndarray,
    include_edges: bool = False,
    max_value: float | None = None,
) -> np.ndarray:
    """Locations of local minima of values(x), refined by a parabola fit.

    Interior minima are refined through the neighbouring three points; edge
    points are excluded by default since a curve cut off mid-fall would
    otherwise contribute a spurious minimum (pass ``include_edges`` to keep
    them, on-grid).  ``max_value`` drops shallow minima above the cutoff,
    which isolates deep revivals on curves with secondary structure.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    if x.size != v.size or x.size < 3:
        raise ValueError("need at least 3 samples")
    found = []
    for i in range(1, x.size - 1):
        if v[i] <= v[i - 1] and v[i] < v[i + 1]:
            denom = v[i - 1] - 2.0 * v[i] + v[i + 1]
            shift = 0.0 if denom <= 0.0 else 0.5 * (v[i - 1] - v[i + 1]) / denom
            xm = x[i] + shift * (x[i + 1] - x[i])
            vm = v[i] - 0.25 * (v[i - 1] - v[i + 1]) * shift
            found.append((xm, vm))
    if include_edges:
        if v[0] < v[1]:
            found.insert(0, (x[0], v[0]))
        if v[-1] < v[-2]:
            found.append((x[-1], v[-1]))
    if max_value is not None:
        found = [f for f in found if f[1] <= max_value]
    return np.array([f[0] for f in found])


def extract_rabi_period(
    x: np.ndarray,
    values: np.ndarray,
    include_edges: bool = False,
    max_value: float | None = None,
) -> float:
    """Mean spacing between adjacent oscillation minima of values(x).

    Raises ValueError when fewer than two minima qualify.
    """
    minima = oscillation_minima(x, values, include_edges, max_value)
    if minima.size < 2:
        raise ValueError(f"need at least 2 minima, found {minima.size}")
    return float(np.mean(np.diff(minima)))


def crossing_points(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x positions where curves a and b cross, by sign change and linear fit."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    out = []
    for i in range(g.size - 1):
        if g[i] == 0.0:
            out.append(x[i])
        elif g[i] * g[i + 1] < 0.0:
            frac = g[i] / (g[i] - g[i + 1])
            out.append(x[i] + frac * (x[i + 1] - x[i]))
    if g[-1] == 0.0:
        out.append(x[-1])
    return np.array(out)
