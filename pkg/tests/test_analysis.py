import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vbloch.core import HBAR, SystemParams
from vbloch.analysis import (
    PEAK_LABELS,
    ControlSearchResult,
    PeakRecord,
    VisibilityError,
    control_search,
    expected_peak_centers,
    locate_peaks,
    peak_visibility,
    phase_map,
    theta1_scan,
    unwrap_phases,
)
from vbloch.twodcs import (
    DelayGrid,
    Excitation,
    Spectrum2D,
    TimeDomainGrid,
    scan_rephasing,
    spectrum_2d,
)

TABLE = SystemParams()
PI = math.pi
DELTA = TABLE.delta

# delay grid small enough for per-spectrum tests to stay affordable
SCAN_AXIS = np.arange(6) * 240.0
SCAN_GRID = DelayGrid(tau_axis=SCAN_AXIS, T_fixed=200.0,
                      t_axis=SCAN_AXIS.copy())


def symmetric_axes(half: float = 12.0, step: float = 0.5):
    n = int(round(half / step))
    return np.linspace(-half, half, 2 * n + 1)


def blob_spectrum(centers_amps, sigma: float = 0.8,
                  phase: float = 0.3) -> Spectrum2D:
    """Synthetic spectrum with Gaussian blobs at given (meV, meV) spots."""
    ax = symmetric_axes()
    values = np.zeros((ax.size, ax.size), dtype=complex)
    for (c_tau, c_t), amp in centers_amps:
        g = np.exp(-((ax[:, None] - c_tau) ** 2
                     + (ax[None, :] - c_t) ** 2) / (2.0 * sigma**2))
        values += amp * np.exp(1j * phase) * g
    return Spectrum2D(values=values, omega_tau_axis=ax, omega_t_axis=ax)


def records(amps) -> list:
    return [
        PeakRecord(label=l, expected_center=(0.0, 0.0),
                   found_center=(0.0, 0.0), max_amplitude=float(a),
                   phase_at_max=0.0, window_halfwidth=DELTA / 3.0)
        for l, a in zip(PEAK_LABELS, amps)
    ]


class TestExpectedCenters:
    def test_rephasing_quadrant(self):
        centers = expected_peak_centers(TABLE)
        assert centers["P1"] == (0.0, 0.0)
        assert centers["P2"] == (0.0, DELTA)
        assert centers["P3"] == (-DELTA, 0.0)
        assert centers["P4"] == (-DELTA, DELTA)


class TestLocatePeaks:
    def test_single_blob_hits_only_its_window(self):
        spec = blob_spectrum([((-DELTA, DELTA), 1.0)])
        peaks = {p.label: p for p in locate_peaks(spec, TABLE)}
        assert peaks["P4"].max_amplitude > 0.9
        for label in ("P1", "P2", "P3"):
            assert peaks[label].max_amplitude < 1e-6

    def test_found_center_and_phase(self):
        spec = blob_spectrum([((-DELTA, DELTA), 1.0)], phase=0.3)
        p4 = locate_peaks(spec, TABLE)[3]
        assert p4.found_center == (-DELTA, DELTA)
        assert p4.phase_at_max == pytest.approx(0.3, abs=1e-12)
        assert -PI < p4.phase_at_max <= PI

    def test_axis_swap_exchanges_cross_peaks(self):
        """Reflecting the spectrum through its axes swaps P2 and P3.

        On symmetric axes, transposing and reversing both directions maps
        S(x, y) -> S(-y, -x), which exchanges the two cross-peak windows
        while fixing both diagonal windows.
        """
        spec = blob_spectrum([((0.0, DELTA), 1.0), ((-DELTA, 0.0), 0.5)])
        swapped = Spectrum2D(values=spec.values[::-1, ::-1].T,
                             omega_tau_axis=spec.omega_tau_axis,
                             omega_t_axis=spec.omega_t_axis)
        before = {p.label: p.max_amplitude for p in locate_peaks(spec, TABLE)}
        after = {p.label: p.max_amplitude
                 for p in locate_peaks(swapped, TABLE)}
        assert after["P2"] == pytest.approx(before["P3"], rel=1e-12)
        assert after["P3"] == pytest.approx(before["P2"], rel=1e-12)
        assert after["P1"] == pytest.approx(before["P1"], rel=1e-12)
        assert after["P4"] == pytest.approx(before["P4"], rel=1e-12)

    def test_translation_moves_found_center_not_amplitude(self):
        spec = blob_spectrum([((-DELTA, DELTA), 1.0)])
        step = spec.omega_tau_axis[1] - spec.omega_tau_axis[0]
        moved = Spectrum2D(values=np.roll(spec.values, (1, -2), axis=(0, 1)),
                           omega_tau_axis=spec.omega_tau_axis,
                           omega_t_axis=spec.omega_t_axis)
        p4 = locate_peaks(spec, TABLE)[3]
        q4 = locate_peaks(moved, TABLE)[3]
        assert q4.max_amplitude == pytest.approx(p4.max_amplitude, rel=1e-12)
        assert q4.found_center[0] - p4.found_center[0] == pytest.approx(step)
        assert q4.found_center[1] - p4.found_center[1] == pytest.approx(
            -2.0 * step)

    def test_gauge_phase_shifts_every_peak(self):
        """A constant phase on the time grid adds to every peak phase."""
        axis = np.arange(16) * 120.0
        grid = DelayGrid(tau_axis=axis, T_fixed=0.0, t_axis=axis.copy())
        exc = Excitation(areas=(0.0,) * 4, fwhm=85.0, params=TABLE)
        base_values = (
            np.exp(1j * (-DELTA * axis[:, None] + DELTA * axis[None, :])
                   / HBAR)
            + 0.5 * np.exp(1j * DELTA * axis[None, :] / HBAR)
            * np.ones((axis.size, 1)))
        phi0 = 2.5
        specs = []
        for factor in (1.0, np.exp(1j * phi0)):
            tg = TimeDomainGrid(values=factor * base_values, axes=grid,
                                excitation=exc)
            specs.append(locate_peaks(spectrum_2d(tg), TABLE))
        for before, after in zip(*specs):
            diff = after.phase_at_max - before.phase_at_max - phi0
            wrapped = (diff + PI) % (2.0 * PI) - PI
            assert abs(wrapped) < 1e-9

    def test_rejects_nonpositive_window(self):
        spec = blob_spectrum([((0.0, 0.0), 1.0)])
        with pytest.raises(ValueError, match="positive"):
            locate_peaks(spec, TABLE, window_halfwidth=0.0)

    def test_rejects_overlapping_windows(self):
        spec = blob_spectrum([((0.0, 0.0), 1.0)])
        with pytest.raises(ValueError, match="overlap"):
            locate_peaks(spec, TABLE, window_halfwidth=3.6)

    def test_rejects_axes_that_miss_a_window(self):
        ax = np.linspace(-3.0, 3.0, 25)   # covers P1 but not P3/P4
        spec = Spectrum2D(values=np.ones((25, 25), dtype=complex),
                          omega_tau_axis=ax, omega_t_axis=ax)
        with pytest.raises(ValueError, match="not cover the P2"):
            locate_peaks(spec, TABLE)


class TestPeakVisibility:
    def test_single_bright_peak(self):
        pv = peak_visibility(records([1.0, 0.0, 0.0, 0.0]))
        assert np.allclose(pv, [100.0, 0.0, 0.0, 0.0])

    def test_equal_peaks(self):
        pv = peak_visibility(records([0.7, 0.7, 0.7, 0.7]))
        assert np.allclose(pv, [25.0, 25.0, 25.0, 25.0])

    def test_intensity_not_amplitude_ratio(self):
        pv = peak_visibility(records([2.0, 1.0, 0.0, 0.0]))
        assert pv[0] == pytest.approx(80.0)
        assert pv[1] == pytest.approx(20.0)

    @given(st.lists(st.floats(min_value=0.0, max_value=1e3), min_size=4,
                    max_size=4).filter(lambda a: max(a) >= 1e-3),
           st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=50, deadline=None)
    def test_sums_to_hundred_and_scale_invariant(self, amps, scale):
        pv = peak_visibility(records(amps))
        assert float(np.sum(pv)) == pytest.approx(100.0)
        scaled = peak_visibility(records([a * scale for a in amps]))
        assert np.allclose(scaled, pv, atol=1e-9)

    def test_all_zero_is_an_error(self):
        with pytest.raises(VisibilityError, match="zero"):
            peak_visibility(records([0.0, 0.0, 0.0, 0.0]))


class TestUnwrapPhases:
    def test_small_jumps_untouched(self):
        seq = [0.0, 1.0, 2.0]
        assert np.allclose(unwrap_phases(seq), seq)

    def test_wrapped_ramp_becomes_monotone(self):
        truth = np.linspace(0.0, 3.0 * PI, 13)
        wrapped = (truth + PI) % (2.0 * PI) - PI
        assert np.allclose(unwrap_phases(wrapped), truth, atol=1e-12)

    def test_exact_half_turn_kept(self):
        out = unwrap_phases([0.0, PI])
        assert out[1] == pytest.approx(PI)


@pytest.fixture(scope="module")
def line():
    return theta1_scan(np.array([0.4, 1.1, 2.3]) * PI, SCAN_GRID, 85.0,
                       TABLE)


class TestTheta1Scan:
    def test_shapes_and_labels(self, line):
        assert line.theta1.shape == (3,)
        assert line.amplitudes.shape == (3, 4)
        assert line.phases.shape == (3, 4)
        assert line.labels == PEAK_LABELS

    def test_common_zero_suppresses_every_peak(self, line):
        """At the area that empties the excited states all peaks collapse."""
        assert np.all(line.amplitudes[2] < 0.25 * line.amplitudes[1])

    def test_lower_diagonal_follows_its_coherence(self, line):
        """P1 is brighter where |rho01| is large (1.1 pi) than at 0.4 pi."""
        assert line.amplitudes[1, 0] > line.amplitudes[0, 0]


class TestPhaseMap:
    def test_threshold_one_keeps_only_the_argmax(self):
        res = phase_map("P4", np.array([0.5, 1.1, 2.1]) * PI, 0.9 * PI,
                        0.9 * PI, 1.0, SCAN_GRID, 85.0, TABLE)
        assert res.theta1.size == 1
        assert res.intensity.size == 1
        assert res.phase_span == 0.0
        assert res.note == ""

    def test_dark_line_returns_note_not_error(self):
        res = phase_map("P2", np.array([0.0]), 0.0, 0.0, 0.7, SCAN_GRID,
                        85.0, TABLE, theta4=0.0)
        assert res.theta1.size == 0
        assert "P2" in res.note
        assert res.phase_span == 0.0

    def test_rejects_unknown_label(self):
        with pytest.raises(ValueError, match="peak_label"):
            phase_map("P5", np.array([1.0]), 0.1, 0.1, 0.7, SCAN_GRID,
                      85.0, TABLE)

    def test_rejects_bad_threshold(self):
        for bad in (0.0, 1.5, -0.1):
            with pytest.raises(ValueError, match="threshold"):
                phase_map("P4", np.array([1.0]), 0.1, 0.1, bad, SCAN_GRID,
                          85.0, TABLE)


class TestControlSearch:
    WEAK4 = 0.1 * PI

    def run_singleton(self, **kwargs):
        one = np.array([1.1 * PI])
        return control_search(one, np.array([0.9 * PI]),
                              np.array([0.9 * PI]), self.WEAK4,
                              grid=SCAN_GRID, fwhm=85.0, params=TABLE,
                              **kwargs)

    def test_budget_refusal_names_the_required_count(self):
        grids = np.linspace(0.5 * PI, 2.1 * PI, 3)
        with pytest.raises(ValueError, match="27"):
            control_search(grids, grids, grids, self.WEAK4, grid=SCAN_GRID,
                           fwhm=85.0, params=TABLE, budget=26)

    def test_rejects_area_outside_range(self):
        with pytest.raises(ValueError, match="4 pi"):
            control_search(np.array([4.5 * PI]), np.array([0.9 * PI]),
                           np.array([0.9 * PI]), self.WEAK4, grid=SCAN_GRID,
                           fwhm=85.0, params=TABLE)

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError, match="nonempty"):
            control_search(np.array([]), np.array([0.9 * PI]),
                           np.array([0.9 * PI]), self.WEAK4, grid=SCAN_GRID,
                           fwhm=85.0, params=TABLE)

    def test_singleton_matches_direct_route(self):
        """One-triple search equals scan + locate + visibility by hand."""
        res = self.run_singleton()
        tg = scan_rephasing(SCAN_GRID, (1.1 * PI, 0.9 * PI, 0.9 * PI,
                                        self.WEAK4), 85.0, TABLE)
        peaks = locate_peaks(spectrum_2d(tg, 2), TABLE)
        pv = peak_visibility(peaks)
        assert res.thetas.shape == (1, 3)
        assert np.allclose(res.thetas[0],
                           [1.1 * PI, 0.9 * PI, 0.9 * PI])
        assert np.allclose(res.intensities[0],
                           [p.max_amplitude**2 for p in peaks], rtol=1e-12)
        assert np.allclose(res.phases[0],
                           [p.phase_at_max for p in peaks], atol=1e-12)
        assert np.allclose(res.visibilities[0], pv, rtol=1e-12)
        assert res.theta4 == self.WEAK4

    def test_best_triples_points_at_argmax(self):
        res = ControlSearchResult(
            thetas=np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]),
            intensities=np.ones((2, 4)),
            phases=np.zeros((2, 4)),
            visibilities=np.array([[80.0, 10.0, 5.0, 5.0],
                                   [20.0, 60.0, 10.0, 10.0]]),
            theta4=0.1 * PI)
        best = res.best_triples()
        assert best["P1"] == ((1.0, 2.0, 3.0), 80.0)
        assert best["P2"] == ((4.0, 5.0, 6.0), 60.0)

    def test_all_zero_areas_propagate_visibility_error(self):
        zero = np.array([0.0])
        with pytest.raises(VisibilityError):
            control_search(zero, zero, zero, 0.0, grid=SCAN_GRID, fwhm=85.0,
                           params=TABLE)

    def test_csv_written_with_resumable_layout(self, tmp_path):
        out = tmp_path / "search.csv"
        res = self.run_singleton(out_path=str(out))
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["index"] == "0"
        assert float(rows[0]["theta1_pi"]) == pytest.approx(1.1)
        assert float(rows[0]["PV_P1_pct"]) == pytest.approx(
            res.visibilities[0, 0])
        assert (tmp_path / "search.csv.meta.json").exists()

    def test_interrupted_resume_is_byte_identical(self, tmp_path):
        """Killing a search mid-run and resuming reproduces the same file."""
        two = np.array([0.4 * PI, 1.1 * PI])
        common = dict(grid=SCAN_GRID, fwhm=85.0, params=TABLE)

        clean = tmp_path / "clean.csv"
        control_search(two, np.array([0.9 * PI]), np.array([0.9 * PI]),
                       self.WEAK4, out_path=str(clean), **common)

        def bomb(done, total):
            if done == 1:
                raise KeyboardInterrupt

        broken = tmp_path / "broken.csv"
        with pytest.raises(KeyboardInterrupt):
            control_search(two, np.array([0.9 * PI]), np.array([0.9 * PI]),
                           self.WEAK4, out_path=str(broken),
                           progress_callback=bomb, **common)
        resumed = control_search(two, np.array([0.9 * PI]),
                                 np.array([0.9 * PI]), self.WEAK4,
                                 out_path=str(broken), resume=True, **common)
        assert clean.read_bytes() == broken.read_bytes()
        again = control_search(two, np.array([0.9 * PI]),
                               np.array([0.9 * PI]), self.WEAK4,
                               out_path=str(clean), resume=True, **common)
        assert np.array_equal(resumed.visibilities, again.visibilities)

    def test_resume_refuses_foreign_file(self, tmp_path):
        out = tmp_path / "search.csv"
        self.run_singleton(out_path=str(out))
        with pytest.raises(ValueError, match="different"):
            control_search(np.array([0.5 * PI]), np.array([0.9 * PI]),
                           np.array([0.9 * PI]), self.WEAK4, grid=SCAN_GRID,
                           fwhm=85.0, params=TABLE, out_path=str(out),
                           resume=True)