"""Four-pulse collinear two-dimensional coherent spectroscopy.

The experiment drives the system with a train of four pulses separated by
delays tau (pulse 1 to 2), T (2 to 3, held fixed), and t (3 to 4), and
detects the total excited-state population after the last pulse.  Cycling
the pulse phases and weighting the detected signal by the conjugate of the
target phase combination isolates the four-wave-mixing component with
signature -phi1 + phi2 + phi3 - phi4; scanning (tau, t) and Fourier
transforming both axes yields a 2D map of absorption versus emission
energy, both measured relative to the pulse carrier.

All integrations are full nonperturbative solutions of the optical Bloch
equations; overlapping pulses need no special casing.  The scan is
embarrassingly parallel over delay points and supports row-granular
checkpointing, so interrupted scans resume without recomputation.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import HBAR, Pulse, PulseSequence, SystemParams, ground_state
from .obe import (
    DEFAULT_OPTIONS,
    SolverOptions,
    _apply_free,
    detection_epoch,
    envelope_fwhm,
    evolve,
    evolve_many,
    pack_state,
    sequence_start,
)

PLANCK = 2.0 * math.pi * HBAR  # meV fs, for cycles/fs <-> meV axis conversion

_DETECTION_MODES = ("population", "emission_weighted")


@dataclass(frozen=True)
class PhaseCycleScheme:
    """Phase grid and target signature for isolating one signal component.

    Pulse i takes the ``steps_i`` phases {2 pi k / steps_i}; the detected
    signal is averaged over all combinations with weight
    exp(-i sum_i signature_i phi_i).  A pulse with one step keeps phase 0
    and its signature entry is only bookkeeping.  Cycled pulses need
    steps >= |signature| + 2 so the signed harmonic cannot alias onto its
    own conjugate.
    """

    steps1: int = 3
    steps2: int = 3
    steps3: int = 3
    steps4: int = 1
    signature: tuple = (-1, 1, 1, -1)

    def __post_init__(self):
        if len(self.signature) != 4:
            raise ValueError("signature must have one weight per pulse")
        if any(int(s) != s for s in self.signature):
            raise ValueError("signature weights must be integers")
        for n, s in zip(self.steps, self.signature):
            if n < 1 or int(n) != n:
                raise ValueError("step counts must be positive integers")
            if n > 1 and n < abs(s) + 2:
                raise ValueError(
                    f"{n} phase steps cannot resolve signature weight {s}; "
                    f"need at least {abs(s) + 2}")

    @property
    def steps(self) -> tuple:
        return (self.steps1, self.steps2, self.steps3, self.steps4)

    @property
    def n_combinations(self) -> int:
        return int(np.prod(self.steps))

    def phase_combinations(self) -> np.ndarray:
        """All cycled phase tuples, shape (n_combinations, 4), fixed order."""
        axes = [2.0 * math.pi * np.arange(n) / n for n in self.steps]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def weights(self) -> np.ndarray:
        """Extraction weights exp(-i signature . phases) per combination."""
        sig = np.asarray(self.signature, dtype=float)
        return np.exp(-1j * self.phase_combinations() @ sig)


DEFAULT_SCHEME = PhaseCycleScheme()


def _uniform_axis(values, name: str) -> np.ndarray:
    ax = np.asarray(values, dtype=float)
    if ax.ndim != 1 or ax.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(ax)) or ax[0] < 0.0:
        raise ValueError(f"{name} must be finite and nonnegative")
    if ax.size > 1:
        steps = np.diff(ax)
        if steps.min() <= 0.0:
            raise ValueError(f"{name} must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-9):
            raise ValueError(f"{name} must be uniformly spaced")
    return ax


@dataclass
class DelayGrid:
    """Scanned (tau, t) delay axes in fs with the middle delay held fixed."""

    tau_axis: np.ndarray
    T_fixed: float
    t_axis: np.ndarray

    def __post_init__(self):
        self.tau_axis = _uniform_axis(self.tau_axis, "tau_axis")
        self.t_axis = _uniform_axis(self.t_axis, "t_axis")
        self.T_fixed = float(self.T_fixed)
        if not (math.isfinite(self.T_fixed) and self.T_fixed >= 0.0):
            raise ValueError("T_fixed must be finite and nonnegative")

    @property
    def tau_step(self) -> float:
        if self.tau_axis.size < 2:
            raise ValueError("tau_axis has no step (single point)")
        return float(self.tau_axis[1] - self.tau_axis[0])

    @property
    def t_step(self) -> float:
        if self.t_axis.size < 2:
            raise ValueError("t_axis has no step (single point)")
        return float(self.t_axis[1] - self.t_axis[0])

    def check_nyquist(self, delta: float):
        """Reject steps too coarse to sample the splitting beat h / delta."""
        if delta <= 0.0:
            return
        limit = PLANCK / (2.0 * delta)
        for name, ax in (("tau", self.tau_axis), ("t", self.t_axis)):
            if ax.size > 1:
                step = float(ax[1] - ax[0])
                if step >= limit:
                    raise ValueError(
                        f"{name} step {step:g} fs undersamples a {delta:g} meV "
                        f"splitting; Nyquist requires step < {limit:.4g} fs")


def default_delay_grid(n_points: int = 128, step: float = 20.0,
                       T: float = 200.0) -> DelayGrid:
    """Square (tau, t) grid from 0 in uniform steps, middle delay T."""
    axis = np.arange(n_points) * step
    return DelayGrid(tau_axis=axis, T_fixed=T, t_axis=axis.copy())


@dataclass
class Excitation:
    """Pulse-train record carried along with computed grids."""

    areas: tuple
    fwhm: float
    params: SystemParams
    detection: str = "population"


@dataclass
class TimeDomainGrid:
    """Extracted complex signal on the (tau, t) delay grid."""

    values: np.ndarray
    axes: DelayGrid
    excitation: Excitation

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        shape = (self.axes.tau_axis.size, self.axes.t_axis.size)
        if self.values.shape != shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match axes {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid contains non-finite values")


@dataclass
class Spectrum2D:
    """Complex 2D spectrum on (omega_tau, omega_t) axes in meV.

    Axes are carrier-relative detunings; the absorption (omega_tau) axis
    is physically nonpositive for the retained signal component and is
    conventionally negated for display.
    """

    values: np.ndarray
    omega_tau_axis: np.ndarray
    omega_t_axis: np.ndarray
    meta: dict = field(default_factory=dict)


def _detection_weights(params: SystemParams, detection: str) -> tuple:
    if detection == "population":
        return 1.0, 1.0
    if detection == "emission_weighted":
        return params.mu01**2, params.mu02**2
    raise ValueError(f"detection must be one of {_DETECTION_MODES}, "
                     f"got {detection!r}")


def _check_delays(delays) -> tuple:
    tau, T, t = (float(x) for x in delays)
    if min(tau, T, t) < 0.0:
        raise ValueError("delays must be nonnegative")
    return tau, T, t


def pulse_train(areas, phases, delays, fwhm: float) -> PulseSequence:
    """Four pulses with the first at time zero, spaced by (tau, T, t)."""
    if len(areas) != 4 or len(phases) != 4:
        raise ValueError("areas and phases must each have four entries")
    tau, T, t = _check_delays(delays)
    centers = (0.0, tau, tau + T, tau + T + t)
    return PulseSequence(pulses=[
        Pulse(area=float(a), center=c, fwhm=fwhm, phase=float(p))
        for a, c, p in zip(areas, centers, phases)
    ])


def run_sequence(areas, phases, delays, fwhm: float, params: SystemParams,
                 opts: SolverOptions = DEFAULT_OPTIONS,
                 detection: str = "population") -> float:
    """Detected signal for one pulse train: excited population after pulse 4.

    Integrates the full four-pulse evolution from before the first pulse to
    the detection epoch and returns S = rho11 + rho22 (optionally weighted
    by the squared transition dipoles with ``detection="emission_weighted"``).
    """
    w1, w2 = _detection_weights(params, detection)
    seq = pulse_train(areas, phases, delays, fwhm)
    traj = evolve(ground_state(), seq, params, detection_epoch(seq, opts), opts)
    return float(w1 * traj.final[1, 1].real + w2 * traj.final[2, 2].real)


def _cycle_signals(areas, delays, fwhm, params, opts, scheme, detection):
    """Detected signal for every phase combination, via one stacked solve."""
    w1, w2 = _detection_weights(params, detection)
    seq = pulse_train(areas, (0.0, 0.0, 0.0, 0.0), delays, fwhm)
    factors = np.exp(1j * scheme.phase_combinations())
    y0 = np.tile(pack_state(ground_state()), (scheme.n_combinations, 1))
    y, _ = evolve_many(y0, seq.pulses, factors, sequence_start(seq, opts),
                       detection_epoch(seq, opts), params, opts)
    return w1 * y[:, 1].real + w2 * y[:, 2].real


def phase_cycle_point(areas, delays, fwhm: float, params: SystemParams,
                      opts: SolverOptions = DEFAULT_OPTIONS,
                      scheme: PhaseCycleScheme = DEFAULT_SCHEME,
                      detection: str = "population") -> complex:
    """Phase-cycled signal component at one (tau, t) point.

    Averages the detected signal over the scheme's phase grid with the
    conjugate-signature weights; the phase variants share one vectorized
    integration.  Equivalent to averaging ``run_sequence`` over all
    combinations, which is the slow reference route.
    """
    signals = _cycle_signals(areas, delays, fwhm, params, opts, scheme,
                             detection)
    return complex(np.sum(signals * scheme.weights()) / scheme.n_combinations)


def _rephasing_row(tau, t_axis, T, areas, fwhm, params, opts, scheme,
                   detection):
    """One tau-row of the scan: the extracted component at every t.

    Every t column is a variant of the same first three pulses, so the
    whole row rides stacked solves.  Columns whose last-pulse window is
    clear of the third pulse's (t >= 2 padding widths) share one solve of
    pulses 1-3; the gap to the last window is bridged in closed form and
    that window is integrated for all (t, phase) variants at once in local
    time.  The remaining columns overlap, so they are solved in full with
    one shared pulse set that carries every candidate last-pulse position,
    each row masking all but its own via its phase factors; their readouts
    are then rewound to the per-column detection epoch in closed form.
    """
    w1, w2 = _detection_weights(params, detection)
    n = scheme.n_combinations
    factors = np.exp(1j * scheme.phase_combinations())
    weights = scheme.weights() / n
    ground = pack_state(ground_state())
    out = np.empty(t_axis.size, dtype=complex)

    pad = opts.pulse_padding * envelope_fwhm(
        Pulse(area=1.0, center=0.0, fwhm=fwhm), opts)
    c3 = tau + T
    first_three = [
        Pulse(area=float(a), center=c, fwhm=fwhm, phase=0.0)
        for a, c in zip(areas[:3], (0.0, tau, c3))
    ]
    splice_ok = (t_axis >= 2.0 * pad) if areas[3] > 0.0 else np.ones(
        t_axis.size, dtype=bool)

    slow = np.nonzero(~splice_ok)[0]
    if slow.size:
        k = slow.size
        pulses = first_three + [
            Pulse(area=float(areas[3]), center=c3 + t_axis[j], fwhm=fwhm,
                  phase=0.0)
            for j in slow
        ]
        fac = np.zeros((k * n, 3 + k), dtype=complex)
        fac[:, :3] = np.tile(factors[:, :3], (k, 1))
        for b in range(k):
            fac[b * n:(b + 1) * n, 3 + b] = factors[:, 3]
        t_end = c3 + t_axis[slow[-1]] + pad
        y0 = np.tile(ground, (k * n, 1))
        y, _ = evolve_many(y0, pulses, fac, -pad, t_end, params, opts)
        # each block detects at its own epoch; undo the extra field-free
        # stretch the shared end time added
        rewind = t_axis[slow[-1]] - t_axis[slow]
        y = _apply_free(y.reshape(k, n, 6), -rewind[:, None], params, opts)
        signals = w1 * y[..., 1].real + w2 * y[..., 2].real
        out[slow] = signals @ weights

    fast = np.nonzero(splice_ok)[0]
    if fast.size:
        t_ref = c3 + pad
        y0 = np.tile(ground, (n, 1))
        y3, _ = evolve_many(y0, first_three, factors[:, :3], -pad, t_ref,
                            params, opts)
        gaps = t_axis[fast] - 2.0 * pad
        y_in = _apply_free(y3[None, :, :], gaps[:, None], params, opts)
        last = [Pulse(area=float(areas[3]), center=0.0, fwhm=fwhm, phase=0.0)]
        fac4 = np.tile(factors[:, 3:], (fast.size, 1))
        y4, _ = evolve_many(y_in.reshape(-1, 6), last, fac4, -pad, pad,
                            params, opts)
        signals = (w1 * y4[:, 1].real + w2 * y4[:, 2].real).reshape(fast.size, n)
        out[fast] = signals @ weights
    return out


def _scan_fingerprint(grid, areas, fwhm, params, opts, scheme, detection):
    return {
        "kind": "rephasing_scan",
        "tau_axis": grid.tau_axis.tolist(),
        "T_fixed": grid.T_fixed,
        "t_axis": grid.t_axis.tolist(),
        "areas": [float(a) for a in areas],
        "fwhm": float(fwhm),
        "params": asdict(params),
        "opts": asdict(opts),
        "scheme": {"steps": list(scheme.steps),
                   "signature": list(scheme.signature)},
        "detection": detection,
    }


class _RowStore:
    """Row-granular checkpoint directory with a config fingerprint."""

    def __init__(self, directory: str, fingerprint: dict):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        stamp = json.dumps(fingerprint, sort_keys=True)
        meta_path = os.path.join(directory, "meta.json")
        if os.path.exists(meta_path):
            with open(meta_path, encoding="utf-8") as fh:
                stored = json.dumps(json.load(fh)["fingerprint"],
                                    sort_keys=True)
            if stored != stamp:
                raise ValueError(
                    f"checkpoint directory {directory} belongs to a different "
                    "scan configuration")
        else:
            with open(meta_path, "w", encoding="utf-8") as fh:
                json.dump({"format": "rephasing-scan-checkpoint",
                           "version": 1,
                           "fingerprint": fingerprint}, fh, indent=1)

    def _path(self, i: int) -> str:
        return os.path.join(self.directory, f"row_{i:05d}.npy")

    def load(self, i: int):
        path = self._path(i)
        return np.load(path) if os.path.exists(path) else None

    def save(self, i: int, row: np.ndarray):
        tmp = self._path(i) + ".tmp"
        with open(tmp, "wb") as fh:
            np.save(fh, row)
        os.replace(tmp, self._path(i))


def scan_rephasing(grid: DelayGrid, areas, fwhm: float, params: SystemParams,
                   opts: SolverOptions = DEFAULT_OPTIONS,
                   scheme: PhaseCycleScheme = DEFAULT_SCHEME,
                   detection: str = "population",
                   checkpoint_dir: str | None = None,
                   progress_callback=None,
                   workers: int = 1) -> TimeDomainGrid:
    """Phase-cycled signal over the whole (tau, t) grid at fixed T.

    Rows (fixed tau) are independent; with ``workers > 1`` they are solved
    in a process pool and assembled in index order, so results do not
    depend on completion order.  With ``checkpoint_dir`` each finished row
    is persisted immediately and a rerun with the same configuration
    recomputes only missing rows; a directory written by a different
    configuration is refused.  ``progress_callback(done, total)`` is
    invoked as rows settle.
    """
    if len(areas) != 4:
        raise ValueError("areas must have four entries")
    _detection_weights(params, detection)
    grid.check_nyquist(params.delta)

    store = None
    if checkpoint_dir is not None:
        store = _RowStore(checkpoint_dir, _scan_fingerprint(
            grid, areas, fwhm, params, opts, scheme, detection))

    n_rows = grid.tau_axis.size
    rows: dict[int, np.ndarray] = {}
    if store is not None:
        for i in range(n_rows):
            cached = store.load(i)
            if cached is not None:
                rows[i] = cached
    done = len(rows)
    if progress_callback is not None and done:
        progress_callback(done, n_rows)

    missing = [i for i in range(n_rows) if i not in rows]
    args = (grid.t_axis, grid.T_fixed, tuple(float(a) for a in areas),
            float(fwhm), params, opts, scheme, detection)

    def settle(i: int, row: np.ndarray):
        nonlocal done
        rows[i] = row
        if store is not None:
            store.save(i, row)
        done += 1
        if progress_callback is not None:
            progress_callback(done, n_rows)

    if workers > 1 and len(missing) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_rephasing_row, grid.tau_axis[i], *args): i
                for i in missing
            }
            for fut in as_completed(futures):
                settle(futures[fut], fut.result())
    else:
        for i in missing:
            settle(i, _rephasing_row(grid.tau_axis[i], *args))

    values = np.stack([rows[i] for i in range(n_rows)])
    excitation = Excitation(areas=tuple(float(a) for a in areas),
                            fwhm=float(fwhm), params=params,
                            detection=detection)
    return TimeDomainGrid(values=values, axes=grid, excitation=excitation)


def spectrum_2d(tgrid: TimeDomainGrid, zero_pad_factor: int = 2,
                window_rate: float | None = None) -> Spectrum2D:
    """2D Fourier transform of a delay-domain grid onto meV axes.

    Both axes use the forward transform kernel exp(-i omega T), so a signal
    component rotating as exp(i (e_a tau + e_b t) / hbar) appears at
    (omega_tau, omega_t) = (e_a, e_b); the retained four-wave-mixing
    component evolves conjugately during tau and lands on the nonpositive
    absorption side.  ``window_rate`` (meV) applies exponential apodization
    exp(-rate (tau + t) / hbar) before transforming; axes are zero-padded
    by ``zero_pad_factor`` and returned fft-shifted, in meV relative to the
    pulse carrier.
    """
    if int(zero_pad_factor) != zero_pad_factor or zero_pad_factor < 1:
        raise ValueError("zero_pad_factor must be a positive integer")
    ax = tgrid.axes
    tau_step, t_step = ax.tau_step, ax.t_step

    values = tgrid.values
    if window_rate is not None:
        if window_rate < 0.0:
            raise ValueError("window_rate must be nonnegative")
        span = ((ax.tau_axis - ax.tau_axis[0])[:, None]
                + (ax.t_axis - ax.t_axis[0])[None, :])
        values = values * np.exp(-window_rate / HBAR * span)

    n_tau = ax.tau_axis.size * int(zero_pad_factor)
    n_t = ax.t_axis.size * int(zero_pad_factor)
    spec = np.fft.fftshift(np.fft.fft2(values, s=(n_tau, n_t)))
    omega_tau = np.fft.fftshift(np.fft.fftfreq(n_tau, d=tau_step)) * PLANCK
    omega_t = np.fft.fftshift(np.fft.fftfreq(n_t, d=t_step)) * PLANCK
    meta = {
        "zero_pad_factor": int(zero_pad_factor),
        "window_rate": window_rate,
        "tau_step": tau_step,
        "t_step": t_step,
        "T_fixed": ax.T_fixed,
        "excitation": tgrid.excitation,
    }
    return Spectrum2D(values=spec, omega_tau_axis=omega_tau,
                      omega_t_axis=omega_t, meta=meta)
