import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from vbloch.core import (
    CONSTANTS,
    HBAR,
    InvalidStateError,
    Pulse,
    PulseSequence,
    SystemParams,
    check_density_matrix,
    effective_dipole,
    gaussian_envelope,
    generalized_rabi_frequency,
    ground_state,
    peak_field_from_area,
    tau_delta_product,
)

finite = st.floats(
    min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False
)


def test_planck_constants_consistent():
    assert CONSTANTS.h == pytest.approx(2.0 * math.pi * CONSTANTS.hbar, rel=1e-9)
    assert HBAR == CONSTANTS.hbar


def test_effective_dipole_pythagorean():
    assert effective_dipole(3.0, 4.0) == pytest.approx(5.0, rel=1e-12)


def test_effective_dipole_default_system():
    p = SystemParams()
    assert p.mu02 == pytest.approx(1.4)
    assert p.mu_eff == pytest.approx(1.7205, abs=5e-5)


@given(finite, finite, st.floats(min_value=1e-3, max_value=1e3))
def test_effective_dipole_symmetric_and_homogeneous(a, b, s):
    assert effective_dipole(a, b) == pytest.approx(effective_dipole(b, a))
    assert effective_dipole(s * a, s * b) == pytest.approx(
        s * effective_dipole(a, b), rel=1e-12
    )


def test_generalized_rabi_quadrature():
    assert generalized_rabi_frequency(3e-3, 4e-3) == pytest.approx(5e-3, rel=1e-12)
    assert generalized_rabi_frequency(0.0, 2e-3) == pytest.approx(2e-3, rel=1e-12)


def test_tau_delta_product_reference_points():
    # Regime classifier values for the pulse durations and splittings used
    # throughout: the 25 meV point is quoted to looser precision upstream.
    assert tau_delta_product(10.0, 7.0) == pytest.approx(0.017, abs=5e-4)
    assert tau_delta_product(85.0, 7.0) == pytest.approx(0.144, abs=5e-4)
    assert tau_delta_product(85.0, 0.82) == pytest.approx(0.017, abs=5e-4)
    assert tau_delta_product(85.0, 25.0) == pytest.approx(0.510, abs=5e-3)


@given(finite, finite, st.floats(min_value=1e-3, max_value=1e3))
def test_tau_delta_product_bilinear(fwhm, delta, s):
    base = tau_delta_product(fwhm, delta)
    assert tau_delta_product(s * fwhm, delta) == pytest.approx(s * base, rel=1e-12)
    assert tau_delta_product(fwhm, s * delta) == pytest.approx(s * base, rel=1e-12)


@pytest.mark.parametrize("area", [0.25 * math.pi, math.pi, 2.3 * math.pi, 10 * math.pi])
@pytest.mark.parametrize("fwhm", [0.1, 10.0, 85.0])
@pytest.mark.parametrize("mu01", [1.0, 0.37])
def test_peak_field_from_area_against_quadrature(area, fwhm, mu01):
    # Independent oracle: numerically integrate mu01 * E0 * G(t) / hbar and
    # demand the nominal area back.
    e0 = peak_field_from_area(area, mu01, fwhm)
    val, err = quad(
        lambda t: mu01 * e0 * gaussian_envelope(t, fwhm) / HBAR,
        -20.0 * fwhm,
        20.0 * fwhm,
        limit=200,
    )
    assert err < 1e-10 * max(1.0, abs(val))
    assert val == pytest.approx(area, rel=1e-10)


def test_gaussian_envelope_fwhm_definition():
    g = gaussian_envelope(np.array([-0.5, 0.0, 0.5]), 1.0, 0.0)
    assert g[1] == pytest.approx(1.0)
    assert g[0] == pytest.approx(0.5, rel=1e-12)
    assert g[2] == pytest.approx(0.5, rel=1e-12)
    # support is negligible three widths out
    assert gaussian_envelope(6.0, 2.0, 0.0) < 1e-10


def test_pulse_validation():
    with pytest.raises(ValueError):
        Pulse(area=1.0, fwhm=-1.0)
    with pytest.raises(ValueError):
        Pulse(area=-0.1, fwhm=10.0)


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(gamma01=-0.1)
    with pytest.raises(ValueError):
        SystemParams(mu01=0.0)


def test_four_pulse_sequence_layout():
    seq = PulseSequence.four_pulse(
        areas=(0.1, 0.2, 0.3, 0.4),
        phases=(0.0, 1.0, 2.0, 0.0),
        delays=(100.0, 200.0, 300.0),
        fwhm=85.0,
    )
    centers = [p.center for p in seq.pulses]
    assert centers == [0.0, 100.0, 300.0, 600.0]
    assert seq.conjugated == (True, False, False, True)
    assert seq.signature == (-1, 1, 1, -1)
    with pytest.raises(ValueError):
        PulseSequence.four_pulse(
            areas=(0.1,) * 4, phases=(0.0,) * 4, delays=(-1.0, 0.0, 0.0), fwhm=85.0
        )


def test_sequence_conjugation_flags_default_false():
    seq = PulseSequence.single(Pulse(area=1.0, fwhm=10.0))
    assert seq.conjugated == (False,)
    with pytest.raises(ValueError):
        PulseSequence(pulses=(Pulse(area=1.0, fwhm=10.0),), conjugated=(True, False))


def test_ground_state_is_physical():
    rho = ground_state()
    check_density_matrix(rho)
    assert rho[0, 0] == 1.0 + 0.0j


def test_check_density_matrix_rejects_bad_states():
    rho = ground_state()
    rho[0, 1] = 0.1  # not Hermitian
    with pytest.raises(InvalidStateError):
        check_density_matrix(rho)

    rho = ground_state() * 1.1  # trace off
    with pytest.raises(InvalidStateError):
        check_density_matrix(rho)

    rho = np.diag([1.2, -0.2, 0.0]).astype(complex)  # negative population
    with pytest.raises(InvalidStateError):
        check_density_matrix(rho)

    with pytest.raises(InvalidStateError):
        check_density_matrix(np.eye(2, dtype=complex))
