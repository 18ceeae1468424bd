"""Builders for synthetic artifact files used by the rendering tests."""

import json

import numpy as np

SWEEP_HEADER = ("# units: theta_over_pi=pi, pop*=occupation probability, "
                "coh*=coherence magnitude\n"
                "theta_over_pi,pop0,pop1,pop2,coh01,coh02,coh12\n")


def write_sweep_csv(path, n_rows: int = 20) -> None:
    theta = np.linspace(0.0, 2.5, n_rows)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SWEEP_HEADER)
        for t in theta:
            pop1 = 0.25 * (1.0 - np.cos(np.pi * t * 1.7))
            row = [t, 1.0 - 1.5 * pop1, pop1, 0.5 * pop1,
                   0.4 * abs(np.sin(np.pi * t)),
                   0.3 * abs(np.sin(np.pi * t)), 0.1 * pop1]
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def write_grid_file(path, values, axes, kind="spectrum", units=None,
                    version="1", fmt="vbloch-grid", element=None,
                    shape=None) -> None:
    """Hand-rolled writer mirroring the documented grid container."""
    values = np.asarray(values)
    if element is None:
        element = "complex128" if np.iscomplexobj(values) else "float64"
    dtype = {"complex128": "<c16", "float64": "<f8"}[element]
    header = {
        "format": fmt,
        "version": version,
        "kind": kind,
        "element": element,
        "shape": list(values.shape) if shape is None else shape,
        "axes": [[name, [float(v) for v in ax]] for name, ax in axes],
        "units": units or {},
        "meta": {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True,
                            separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(values, dtype=dtype).tobytes())


def blob_spectrum(center=(0.0, 7.0), phase: float = 0.0, peak: float = 1.0):
    """Complex 2D grid with one Gaussian blob at the given center."""
    omega_tau = np.linspace(-14.0, 7.0, 43)
    omega_t = np.linspace(-7.0, 14.0, 43)
    wt, we = np.meshgrid(omega_tau, omega_t, indexing="ij")
    amp = peak * np.exp(-(((wt - center[0]) / 1.2) ** 2
                          + ((we - center[1]) / 1.2) ** 2))
    values = amp * np.exp(1j * phase)
    axes = [["omega_tau_mev", omega_tau], ["omega_t_mev", omega_t]]
    return values, axes


def write_area_scan_csv(path, n_rows: int = 12) -> None:
    theta1 = np.linspace(0.1, 2.3, n_rows)
    header = ["theta1_over_pi"]
    header += [f"amp_{lab}" for lab in ("P1", "P2", "P3", "P4")]
    header += [f"phase_{lab}_rad" for lab in ("P1", "P2", "P3", "P4")]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for t in theta1:
            amps = [abs(np.sin(np.pi * t * 0.86)) * s
                    for s in (1.0, 0.8, 0.4, 0.4)]
            row = [t] + amps + [0.3 * t] * 4
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


CONTROL_COLUMNS = ["index", "theta1_pi", "theta2_pi", "theta3_pi"]
for _label in ("P1", "P2", "P3", "P4"):
    CONTROL_COLUMNS += [f"I_{_label}", f"phase_{_label}_rad",
                        f"PV_{_label}_pct"]


def write_control_csv(path, rows) -> None:
    """rows: iterables of (theta1_pi, theta2_pi, theta3_pi, I_P4, phase_P4)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CONTROL_COLUMNS) + "\n")
        for idx, (t1, t2, t3, i4, p4) in enumerate(rows):
            cells = [idx, t1, t2, t3]
            for _ in ("P1", "P2", "P3"):
                cells += [0.01, 0.0, 1.0]
            cells += [i4, p4, 97.0]
            fh.write(",".join(repr(float(c)) for c in cells) + "\n")
