"""Coherent dynamics of a V-type three-level system driven by shaped pulse trains.

The package integrates the optical Bloch equations for a ground state coupled
to two closely split excited states, sweeps pulse areas, and assembles
phase-cycled four-pulse scans into two-dimensional coherent spectra.
"""

from vbloch.core import (
    CONSTANTS,
    HBAR,
    InvalidStateError,
    PhysicalConstants,
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
from vbloch.obe import (
    IntegrationError,
    NumericalInstabilityError,
    SolverOptions,
    Trajectory,
    detection_epoch,
    evolve,
    field_at,
    free_evolve,
    obe_rhs,
)
from vbloch.singlepulse import (
    AreaSweepResult,
    crossing_points,
    default_area_grid,
    delta_pulse_oracle,
    extract_rabi_period,
    oscillation_minima,
    sweep_pulse_area,
)
from vbloch.twodcs import (
    DEFAULT_SCHEME,
    PLANCK,
    DelayGrid,
    Excitation,
    PhaseCycleScheme,
    Spectrum2D,
    TimeDomainGrid,
    default_delay_grid,
    phase_cycle_point,
    pulse_train,
    run_sequence,
    scan_rephasing,
    spectrum_2d,
)
from vbloch.analysis import (
    PEAK_LABELS,
    ControlSearchResult,
    PeakRecord,
    PhaseMapResult,
    Theta1ScanResult,
    VisibilityError,
    control_search,
    expected_peak_centers,
    locate_peaks,
    peak_visibility,
    phase_map,
    theta1_scan,
    unwrap_phases,
)

__version__ = "0.1.0"
