"""Shared model definitions for a V-type three-level system driven by short pulses.

The system has a ground state |0> and two excited states |1>, |2> split by an
energy ``delta``.  Both excited states couple to the ground state by dipole
transitions (strengths mu01, mu02 = mu_ratio * mu01); the 1<->2 transition is
dipole forbidden.  Energies are in meV, times in fs, dipoles in units of mu01,
and fields in units of hbar/(mu01 fs), so mu01 * E / hbar is a Rabi frequency
in rad/fs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "HBAR",
    "SystemParams",
    "Pulse",
    "PulseSequence",
    "InvalidStateError",
    "ground_state",
    "check_density_matrix",
    "effective_dipole",
    "generalized_rabi_frequency",
    "tau_delta_product",
    "gaussian_envelope",
    "peak_field_from_area",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """Planck constants in meV fs."""

    hbar: float = 658.2119569
    h: float = 4135.667696


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar


class InvalidStateError(ValueError):
    """A 3x3 matrix failed the density-matrix checks."""


@dataclass(frozen=True)
class SystemParams:
    """V-system parameters.  Energies and rates in meV, dipoles in units of mu01.

    ``laser_detuning1`` is the detuning of the 0-1 transition from the frame
    carrier; state 2 then sits at ``laser_detuning1 + delta``.  Decay rates
    enter the equations of motion as gamma / hbar (rad/fs).
    """

    delta: float = 7.0
    gamma01: float = 0.193
    gamma02: float = 0.193
    gamma12: float = 0.386
    gamma1: float = 0.386
    gamma2: float = 0.386
    mu01: float = 1.0
    mu_ratio: float = 1.4
    laser_detuning1: float = 0.0

    def __post_init__(self) -> None:
        for name in ("gamma01", "gamma02", "gamma12", "gamma1", "gamma2"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.mu01 <= 0.0:
            raise ValueError("mu01 must be positive")
        if self.mu_ratio < 0.0:
            raise ValueError("mu_ratio must be non-negative")

    @property
    def mu02(self) -> float:
        return self.mu_ratio * self.mu01

    @property
    def mu_eff(self) -> float:
        return effective_dipole(self.mu01, self.mu02)


@dataclass(frozen=True)
class Pulse:
    """One Gaussian pulse.

    ``area`` is the pulse area in rad, defined against mu01 (the integral of
    mu01 * envelope / hbar over the pulse).  ``fwhm`` is the nominal duration
    in fs; whether it labels the intensity or the field profile is a solver
    option.  ``phase`` is the carrier phase in rad and ``carrier_detuning``
    (meV) offsets this pulse's carrier from the frame carrier.
    """

    area: float
    fwhm: float
    center: float = 0.0
    phase: float = 0.0
    carrier_detuning: float = 0.0

    def __post_init__(self) -> None:
        if self.fwhm <= 0.0:
            raise ValueError("fwhm must be positive")
        if self.area < 0.0:
            raise ValueError("area must be non-negative")


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulse train with phase-matching conjugation flags.

    ``conjugated[i]`` marks pulse i as acting with a negative phase signature
    in the extracted four-wave-mixing component; it does not change the field.
    """

    pulses: tuple[Pulse, ...]
    conjugated: tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.conjugated:
            object.__setattr__(self, "conjugated", (False,) * len(self.pulses))
        if len(self.conjugated) != len(self.pulses):
            raise ValueError("conjugated flags must match the number of pulses")

    def __len__(self) -> int:
        return len(self.pulses)

    @property
    def signature(self) -> tuple[int, ...]:
        return tuple(-1 if c else 1 for c in self.conjugated)

    @classmethod
    def single(cls, pulse: Pulse) -> "PulseSequence":
        return cls(pulses=(pulse,))

    @classmethod
    def four_pulse(
        cls,
        areas: tuple[float, float, float, float],
        phases: tuple[float, float, float, float],
        delays: tuple[float, float, float],
        fwhm: float,
    ) -> "PulseSequence":
        """Collinear A* B C D* train: delays = (tau, T_wait, t) center to center."""
        tau, t_wait, t_det = delays
        if min(tau, t_wait, t_det) < 0.0:
            raise ValueError("delays must be non-negative")
        centers = (0.0, tau, tau + t_wait, tau + t_wait + t_det)
        pulses = tuple(
            Pulse(area=a, fwhm=fwhm, center=c, phase=p)
            for a, c, p in zip(areas, centers, phases)
        )
        return cls(pulses=pulses, conjugated=(True, False, False, True))


def ground_state() -> np.ndarray:
    """Density matrix of the pure ground state."""
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def check_density_matrix(
    rho: np.ndarray,
    *,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-9,
    eig_floor: float = -1e-8,
) -> None:
    """Raise InvalidStateError unless rho is Hermitian, unit trace, and positive.

    Tolerances: Hermiticity to ``herm_tol``, trace to ``trace_tol``, and
    eigenvalues above ``eig_floor``.
    """
    rho = np.asarray(rho)
    if rho.shape != (3, 3):
        raise InvalidStateError(f"expected a 3x3 matrix, got shape {rho.shape}")
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > herm_tol:
        raise InvalidStateError(f"not Hermitian: max asymmetry {herm_err:.3e}")
    trace_err = abs(np.trace(rho) - 1.0)
    if trace_err > trace_tol:
        raise InvalidStateError(f"trace deviates from 1 by {trace_err:.3e}")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < eig_floor:
        raise InvalidStateError(f"negative eigenvalue {eigs.min():.3e}")


def effective_dipole(mu01: float, mu02: float) -> float:
    """Quadrature sum of the two transition dipoles."""
    return math.hypot(mu01, mu02)


def generalized_rabi_frequency(detuning: float, rabi: float) -> float:
    """Generalized Rabi frequency sqrt(detuning^2 + rabi^2), both in rad/fs."""
    return math.hypot(detuning, rabi)


def tau_delta_product(
    fwhm: float, delta: float, constants: PhysicalConstants = CONSTANTS
) -> float:
    """Dimensionless duration-splitting product fwhm * delta / h."""
    return fwhm * delta / constants.h


def gaussian_envelope(t, fwhm: float, center: float = 0.0):
    """Unit-peak Gaussian with the given full width at half maximum."""
    x = (np.asarray(t, dtype=float) - center) / fwhm
    return np.exp(-4.0 * math.log(2.0) * x * x)


def peak_field_from_area(
    area: float,
    mu01: float,
    fwhm: float,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Peak field E0 such that mu01/hbar * integral of E0 * G(t) equals ``area``.

    ``fwhm`` is the FWHM of the field envelope G itself.  For a Gaussian the
    time integral is fwhm * sqrt(pi / (4 ln 2)), so
    E0 = area * hbar / (mu01 * fwhm) * sqrt(4 ln 2 / pi).
    """
    if fwhm <= 0.0:
        raise ValueError("fwhm must be positive")
    if mu01 == 0.0:
        raise ValueError("mu01 must be nonzero")
    return area * constants.hbar / (mu01 * fwhm) * math.sqrt(4.0 * math.log(2.0) / math.pi)
