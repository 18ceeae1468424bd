"""Optical Bloch equations for the V system, with pulsed driving.

The density matrix is propagated in a frame rotating at the laser carrier.
Coherences advance as exp(+i d t) with d the transition detuning in rad/fs
(0 for state 1 on resonance, delta/hbar for state 2), and the drive enters
through the complex envelope returned by :func:`field_at`.  In ``full_field``
mode the explicit carrier is kept (at a configurable test energy) and the
counter-rotating terms are retained.

Integration uses an embedded Dormand-Prince 5(4) pair with adaptive steps.
The stepper is vectorized over a stack of independent density matrices that
share the same pulse geometry but may differ in state and per-pulse phase;
this is what makes the phase-cycled delay scans affordable.  Outside every
pulse window (field below ~1e-12 of peak) the equations are solved in closed
form by :func:`free_evolve`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    HBAR,
    Pulse,
    PulseSequence,
    SystemParams,
    check_density_matrix,
    ground_state,
    peak_field_from_area,
)

__all__ = [
    "SolverOptions",
    "Trajectory",
    "IntegrationError",
    "NumericalInstabilityError",
    "field_at",
    "free_evolve",
    "evolve",
    "evolve_many",
    "detection_epoch",
    "pulse_windows",
    "pack_state",
    "unpack_state",
]

# Field envelopes below this fraction of their peak are treated as zero.
FIELD_FLOOR = 1e-12


class IntegrationError(RuntimeError):
    """Adaptive stepping failed (step-size underflow or step budget hit)."""


class NumericalInstabilityError(RuntimeError):
    """An integration result violated the density-matrix invariants."""


@dataclass(frozen=True)
class SolverOptions:
    """Integrator and field-synthesis settings.

    ``pulse_padding`` sets the half-width of each pulse's integration window
    in units of the field-envelope FWHM; beyond that the Gaussian is below
    1e-10 of peak and the evolution is treated as free.  ``max_step`` caps
    the step inside pulse windows; None picks a quarter of the narrowest
    envelope so the pulse cannot be stepped over.

    ``fwhm_convention`` maps Pulse.fwhm to the FWHM of the field envelope:
    "hwhm" reads the duration as the envelope's half width at half maximum
    (envelope FWHM = 2 * fwhm), "field" as the envelope FWHM itself, and
    "intensity" as the intensity-profile FWHM (envelope FWHM = sqrt(2) *
    fwhm).  The pulse area is preserved under every convention; only the
    peak field rescales.  "hwhm" is the convention that reproduces the
    reference single-pulse curves and is the default.

    ``carrier_energy`` (meV) is the explicit carrier used in ``full_field``
    mode.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_step: float | None = None
    pulse_padding: float = 3.0
    mode: str = "rotating_wave"
    fwhm_convention: str = "hwhm"
    carrier_energy: float = 1500.0

    def __post_init__(self) -> None:
        if self.pulse_padding < 2.0:
            raise ValueError("pulse_padding must be at least 2")
        if self.mode not in ("rotating_wave", "full_field"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.fwhm_convention not in ("hwhm", "intensity", "field"):
            raise ValueError(f"unknown fwhm_convention {self.fwhm_convention!r}")
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_step is not None and self.max_step <= 0.0:
            raise ValueError("max_step must be positive")


DEFAULT_OPTIONS = SolverOptions()


@dataclass
class Trajectory:
    """Sampled evolution: states[i] is the density matrix at times[i]."""

    times: np.ndarray
    states: np.ndarray
    final: np.ndarray


def pack_state(rho: np.ndarray) -> np.ndarray:
    """3x3 Hermitian density matrix -> (rho00, rho11, rho22, rho01, rho02, rho12)."""
    rho = np.asarray(rho)
    return np.array(
        [rho[0, 0], rho[1, 1], rho[2, 2], rho[0, 1], rho[0, 2], rho[1, 2]],
        dtype=complex,
    )


def unpack_state(y: np.ndarray) -> np.ndarray:
    """Inverse of pack_state; the lower triangle is filled by conjugation."""
    rho = np.empty((3, 3), dtype=complex)
    rho[0, 0], rho[1, 1], rho[2, 2] = y[0].real, y[1].real, y[2].real
    rho[0, 1], rho[0, 2], rho[1, 2] = y[3], y[4], y[5]
    rho[1, 0], rho[2, 0], rho[2, 1] = np.conj(y[3]), np.conj(y[4]), np.conj(y[5])
    return rho


def envelope_fwhm(pulse: Pulse, opts: SolverOptions = DEFAULT_OPTIONS) -> float:
    """FWHM of the field envelope implied by the pulse's nominal duration."""
    if opts.fwhm_convention == "hwhm":
        return pulse.fwhm * 2.0
    if opts.fwhm_convention == "intensity":
        return pulse.fwhm * math.sqrt(2.0)
    return pulse.fwhm


def _frame_detunings(params: SystemParams, opts: SolverOptions) -> tuple[float, float, float]:
    """(d1, d2, d12) rotation rates in rad/fs for the chosen frame."""
    d1 = params.laser_detuning1 / HBAR
    d2 = d1 + params.delta / HBAR
    if opts.mode == "full_field":
        wc = opts.carrier_energy / HBAR
        return wc + d1, wc + d2, params.delta / HBAR
    return d1, d2, params.delta / HBAR


class _PulseSet:
    """Per-pulse field synthesis shared by a stack of systems.

    Carries peak envelopes (including the 1/2 rotating-frame factor), the
    analytic-signal rotation rates, and the active integration windows.
    """

    def __init__(self, pulses, params: SystemParams, opts: SolverOptions):
        self.opts = opts
        self.centers = np.array([p.center for p in pulses], dtype=float)
        self.widths = np.array([envelope_fwhm(p, opts) for p in pulses], dtype=float)
        self.peaks = np.array(
            [
                0.5 * peak_field_from_area(p.area, params.mu01, w)
                for p, w in zip(pulses, self.widths)
            ],
            dtype=float,
        )
        # analytic-signal rotation per pulse: exp(i * rot * t)
        rot = -np.array([p.carrier_detuning for p in pulses], dtype=float) / HBAR
        if opts.mode == "full_field":
            rot = rot + opts.carrier_energy / HBAR
        self.rots = rot
        self.gauss_coef = 4.0 * math.log(2.0) / self.widths**2

    def analytic(self, t: float) -> np.ndarray:
        """Complex analytic field of each pulse at time t (unit carrier phase)."""
        dt = t - self.centers
        env = self.peaks * np.exp(-self.gauss_coef * dt * dt)
        return env * np.exp(1j * self.rots * t)

    def windows(self) -> list[tuple[float, float]]:
        """Merged [lo, hi] spans where any pulse field is non-negligible."""
        pad = self.opts.pulse_padding
        spans = sorted(
            (c - pad * w, c + pad * w)
            for c, w, pk in zip(self.centers, self.widths, self.peaks)
            if pk > 0.0
        )
        merged: list[tuple[float, float]] = []
        for lo, hi in spans:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return merged

    def window_max_step(self) -> float:
        active = self.widths[self.peaks > 0.0]
        step = float(active.min()) / 4.0 if active.size else math.inf
        if self.opts.mode == "full_field":
            carrier = self.opts.carrier_energy / HBAR
            step = min(step, math.pi / (8.0 * carrier))
        if self.opts.max_step is not None:
            step = min(step, self.opts.max_step)
        return step


def _rate_coefficients(params: SystemParams, opts: SolverOptions):
    """Detuning, decay, and dipole coefficients shared by every RHS entry point."""
    d1, d2, d12 = _frame_detunings(params, opts)
    return (
        1j * d1 - params.gamma01 / HBAR,
        1j * d2 - params.gamma02 / HBAR,
        1j * d12 - params.gamma12 / HBAR,
        params.gamma1 / HBAR,
        params.gamma2 / HBAR,
        params.mu01 / HBAR,
        params.mu02 / HBAR,
    )


def _packed_derivative(y: np.ndarray, f: np.ndarray, coefs) -> np.ndarray:
    """Equation-of-motion derivative for a (K, 6) stack driven by fields f (K,)."""
    c01, c02, c12, g1, g2, m1, m2 = coefs
    o1 = m1 * f
    o2 = m2 * f
    r00 = y[:, 0].real
    r11 = y[:, 1].real
    r22 = y[:, 2].real
    r01 = y[:, 3]
    r02 = y[:, 4]
    r12 = y[:, 5]
    pump1 = (np.conj(o1) * r01).imag
    pump2 = (np.conj(o2) * r02).imag
    out = np.empty_like(y)
    out[:, 0] = g1 * r11 + g2 * r22 + 2.0 * (pump1 + pump2)
    out[:, 1] = -g1 * r11 - 2.0 * pump1
    out[:, 2] = -g2 * r22 - 2.0 * pump2
    out[:, 3] = c01 * r01 + 1j * (o1 * (r11 - r00) + o2 * np.conj(r12))
    out[:, 4] = c02 * r02 + 1j * (o2 * (r22 - r00) + o1 * r12)
    out[:, 5] = c12 * r12 + 1j * (np.conj(o1) * r02 - o2 * np.conj(r01))
    return out


def obe_rhs(rho: np.ndarray, field: complex, params: SystemParams,
            opts: SolverOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Time derivative of one density matrix under the drive field at an instant.

    In rotating_wave mode ``field`` is the complex analytic envelope (half the
    real field amplitude, pulse phase included); in full_field mode its real
    part is taken as the carrier-resolved field. Returns the 3x3 Hermitian
    derivative in 1/fs units.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise ValueError(f"rho must be a 3x3 matrix, got shape {rho.shape}")
    f = np.array([field], dtype=complex)
    if opts.mode == "full_field":
        f = f.real.astype(complex)
    out = _packed_derivative(pack_state(rho)[None, :], f,
                             _rate_coefficients(params, opts))
    return unpack_state(out[0])


def _make_rhs(pulse_set: _PulseSet, phase_factors: np.ndarray,
              params: SystemParams, opts: SolverOptions):
    """Right-hand side for a (K, 6) stack of packed density matrices."""
    coefs = _rate_coefficients(params, opts)
    full = opts.mode == "full_field"

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        f = phase_factors @ pulse_set.analytic(t)  # (K,)
        if full:
            # the analytic signal carries E0/2; the real carrier field is
            # its full oscillating amplitude
            f = 2.0 * f.real
        return _packed_derivative(y, f, coefs)

    return rhs


# Dormand-Prince 5(4) tableau (the RK45 pair); E is the 5th-4th order defect.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_MAX_STEPS_PER_WINDOW = 1_000_000


def _dp45(rhs, t0: float, y0: np.ndarray, t1: float, opts: SolverOptions,
          max_step: float, record: list[float]):
    """Integrate y' = rhs(t, y) from t0 to t1, snapshotting at ``record`` times.

    Steps land exactly on every record time and on t1.  Returns (y_end,
    snapshots) with snapshots[i] taken at record[i].
    """
    rtol, atol = opts.rel_tol, opts.abs_tol
    y = y0.astype(complex, copy=True)
    t = t0
    snapshots: list[np.ndarray] = []
    targets = list(record) + [t1]
    for tt in targets:
        if tt < t - 1e-9:
            raise ValueError("record times must be sorted and inside the span")

    k1 = rhs(t, y)
    h = min(max_step, max((t1 - t0) / 8.0, 1e-8))
    # below this step the tolerance cannot be met in double precision
    h_floor = 1e-12 * max(1.0, abs(t0), abs(t1))
    n_steps = 0
    stages = [None] * 7
    for target in targets:
        # gaps below resolvable time are snapshot-only, not integration spans
        while target - t > 1e-12 * max(1.0, abs(target)):
            while True:
                n_steps += 1
                if n_steps > _MAX_STEPS_PER_WINDOW:
                    raise IntegrationError(f"step budget exhausted at t = {t:.6g} fs")
                clamped = h >= target - t
                h_try = target - t if clamped else h
                if not clamped and h_try < h_floor:
                    raise IntegrationError(f"step size underflow at t = {t:.6g} fs")
                stages[0] = k1
                for i in range(1, 6):
                    yi = y + h_try * sum(
                        a * stages[j] for j, a in enumerate(_DP_A[i])
                    )
                    stages[i] = rhs(t + _DP_C[i] * h_try, yi)
                y_new = y + h_try * sum(b * stages[j] for j, b in enumerate(_DP_B))
                stages[6] = rhs(t + h_try, y_new)
                err_vec = h_try * sum(e * stages[j] for j, e in enumerate(_DP_E))
                scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
                err = math.sqrt(float(np.mean(np.abs(err_vec / scale) ** 2)))
                if err <= 1.0:
                    factor = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
                    h = min(max_step, h_try * factor)
                    t = target if clamped else t + h_try
                    y = y_new
                    k1 = stages[6]
                    break
                h = h_try * max(0.2, 0.9 * err ** -0.2)
        t = target
        if target != t1 or len(snapshots) < len(record):
            snapshots.append(y.copy())
    # the last snapshot above covers a record time equal to t1, if any
    if len(snapshots) > len(record):
        snapshots = snapshots[: len(record)]
    return y, snapshots


def _free_factors(dt, params: SystemParams, opts: SolverOptions):
    """Closed-form factors for field-free evolution over dt (any sign, any shape)."""
    d1, d2, d12 = _frame_detunings(params, opts)
    dt = np.asarray(dt, dtype=float)
    f1 = np.exp(-params.gamma1 / HBAR * dt)
    f2 = np.exp(-params.gamma2 / HBAR * dt)
    c01 = np.exp((1j * d1 - params.gamma01 / HBAR) * dt)
    c02 = np.exp((1j * d2 - params.gamma02 / HBAR) * dt)
    c12 = np.exp((1j * d12 - params.gamma12 / HBAR) * dt)
    return f1, f2, c01, c02, c12


def _apply_free(y: np.ndarray, dt, params: SystemParams, opts: SolverOptions) -> np.ndarray:
    """Free evolution of packed states; y has shape (..., 6), dt broadcasts."""
    f1, f2, c01, c02, c12 = _free_factors(dt, params, opts)
    out = np.empty(np.broadcast_shapes(y[..., 0].shape, np.shape(f1)) + (6,), dtype=complex)
    p1 = y[..., 1].real
    p2 = y[..., 2].real
    out[..., 0] = y[..., 0].real + p1 * (1.0 - f1) + p2 * (1.0 - f2)
    out[..., 1] = p1 * f1
    out[..., 2] = p2 * f2
    out[..., 3] = y[..., 3] * c01
    out[..., 4] = y[..., 4] * c02
    out[..., 5] = y[..., 5] * c12
    return out


def field_at(seq: PulseSequence, t, params: SystemParams,
             opts: SolverOptions = DEFAULT_OPTIONS):
    """Drive field of the sequence at time(s) t, as the integrator sees it.

    Rotating-wave mode returns the complex envelope
    sum_i E0_i/2 G_i(t) exp(i phi_i) exp(-i carrier_detuning_i t / hbar);
    full_field mode returns the real field with the explicit test carrier.
    Outside the merged integration windows (pulse_padding envelope widths
    from every pulse center) the field is exactly zero, matching the free
    propagation used there.  Scalar t gives a scalar; array t gives an array.
    """
    ps = _PulseSet(seq.pulses, params, opts)
    phases = np.array([[np.exp(1j * p.phase) for p in seq.pulses]])
    tarr = np.atleast_1d(np.asarray(t, dtype=float))
    windows = ps.windows()
    vals = np.array(
        [
            (phases @ ps.analytic(tt))[0]
            if any(lo <= tt <= hi for lo, hi in windows)
            else 0.0j
            for tt in tarr
        ]
    )
    if opts.mode == "full_field":
        vals = 2.0 * vals.real
    return vals[0] if np.isscalar(t) or np.ndim(t) == 0 else vals


def free_evolve(rho: np.ndarray, dt: float, params: SystemParams,
                opts: SolverOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Field-free propagation of a density matrix by dt >= 0 fs, in closed form.

    Populations decay at gamma1, gamma2 (feeding the ground state),
    coherences decay at their dephasing rates while rotating at the frame
    detunings.  Exact; used to bridge the gaps between pulse windows.
    """
    y = pack_state(rho)
    return unpack_state(_apply_free(y, float(dt), params, opts))


def detection_epoch(seq: PulseSequence, opts: SolverOptions = DEFAULT_OPTIONS) -> float:
    """Readout time for a sequence: last pulse center + padding * envelope fwhm.

    This is the end of the last integration window, the first instant at
    which the remaining field is negligible under every fwhm convention,
    so "after the pulse" readouts always see the complete pulse area.
    The padding knob moves it.
    """
    last = max(seq.pulses, key=lambda p: p.center)
    return last.center + opts.pulse_padding * envelope_fwhm(last, opts)


def pulse_windows(seq: PulseSequence, params: SystemParams,
                  opts: SolverOptions = DEFAULT_OPTIONS) -> list[tuple[float, float]]:
    """Merged integration windows of the sequence (active pulses only)."""
    return _PulseSet(seq.pulses, params, opts).windows()


def sequence_start(seq: PulseSequence, opts: SolverOptions = DEFAULT_OPTIONS) -> float:
    """Earliest integration start: first pulse center - padding * envelope fwhm."""
    return min(p.center - opts.pulse_padding * envelope_fwhm(p, opts) for p in seq.pulses)


def evolve_many(
    y0: np.ndarray,
    pulses,
    phase_factors: np.ndarray,
    t0: float,
    t_end: float,
    params: SystemParams,
    opts: SolverOptions = DEFAULT_OPTIONS,
    t_record=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate a (K, 6) stack of packed states through a shared pulse train.

    All systems see the same pulse geometry; system k scales pulse i's
    analytic field by ``phase_factors[k, i]`` (e.g. exp(i phi) for a carrier
    phase).  Gaps where every envelope is below FIELD_FLOOR of peak are
    advanced with the closed-form free propagator.  Returns the final stack
    and an array of snapshots at the sorted times in ``t_record``.
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=complex))
    phase_factors = np.atleast_2d(np.asarray(phase_factors, dtype=complex))
    if phase_factors.shape != (y0.shape[0], len(pulses)):
        raise ValueError("phase_factors must have shape (n_systems, n_pulses)")
    record = np.sort(np.asarray(t_record, dtype=float)) if t_record is not None else np.empty(0)
    if record.size and (record[0] < t0 or record[-1] > t_end):
        raise ValueError("t_record times must lie within [t0, t_end]")
    if t_end < t0:
        raise ValueError("t_end must not precede t0")

    ps = _PulseSet(pulses, params, opts)
    max_step = ps.window_max_step()
    windows = [
        (max(lo, t0), min(hi, t_end))
        for lo, hi in ps.windows()
        if hi > t0 and lo < t_end
    ]
    rhs = _make_rhs(ps, phase_factors, params, opts)

    snapshots = np.empty((record.size,) + y0.shape, dtype=complex)
    y = y0.copy()
    t = t0
    ri = 0

    def free_to(t_next: float):
        nonlocal y, t, ri
        while ri < record.size and record[ri] <= t_next:
            snapshots[ri] = _apply_free(y, record[ri] - t, params, opts)
            ri += 1
        if t_next > t:
            y = _apply_free(y, t_next - t, params, opts)
            t = t_next

    for lo, hi in windows:
        free_to(lo)
        inside = [float(x) for x in record[ri:] if x <= hi]
        y, snaps = _dp45(rhs, t, y, hi, opts, max_step, inside)
        for s in snaps:
            snapshots[ri] = s
            ri += 1
        t = hi
    free_to(t_end)
    return y, snapshots


def evolve(
    rho0: np.ndarray,
    seq: PulseSequence,
    params: SystemParams,
    t_end: float,
    opts: SolverOptions = DEFAULT_OPTIONS,
    t_eval=None,
    validate: bool = True,
) -> Trajectory:
    """Integrate the driven Bloch equations from before the first pulse to t_end.

    ``rho0`` is the 3x3 density matrix at the sequence start time (first
    pulse center minus padding * envelope fwhm).  Optional ``t_eval`` times
    are sampled along the way.  The final state is checked against the
    density-matrix invariants at 1e-6 and a NumericalInstabilityError is
    raised on violation.
    """
    if validate:
        check_density_matrix(rho0)
    t0 = sequence_start(seq, opts)
    if t_end < t0:
        raise ValueError(f"t_end = {t_end} precedes the sequence start {t0}")
    phase_factors = np.array([[np.exp(1j * p.phase) for p in seq.pulses]])
    y0 = pack_state(rho0)[None, :]
    times = np.sort(np.asarray(t_eval, dtype=float)) if t_eval is not None else None
    y_end, snaps = evolve_many(
        y0, seq.pulses, phase_factors, t0, t_end, params, opts, t_record=times
    )
    final = unpack_state(y_end[0])
    if validate:
        _check_invariants(final)
    if times is None:
        return Trajectory(np.array([t_end]), final[None, :, :], final)
    states = np.array([unpack_state(s[0]) for s in snaps])
    return Trajectory(times, states, final)


def _check_invariants(rho: np.ndarray, tol: float = 1e-6) -> None:
    trace_err = abs(np.trace(rho).real - 1.0)
    if trace_err > tol:
        raise NumericalInstabilityError(f"trace drifted by {trace_err:.3e}")
    eigs = np.linalg.eigvalsh(rho)
    if eigs.min() < -tol:
        raise NumericalInstabilityError(f"negative eigenvalue {eigs.min():.3e}")
