"""Figure construction: curve plots, spectrum maps, and the 3D scatter."""

import numpy as np
import pytest
from artifactgen import (blob_spectrum, write_area_scan_csv,
                         write_control_csv, write_grid_file)
from matplotlib.backends.backend_agg import FigureCanvasAgg
from PIL import Image

from plotkit import (HUE_LEGEND, PlotDataError, PlotSpec, plot_curves,
                     plot_phase_scatter, plot_spectrum, save_figure)
from plotkit.render import AREA_SCAN_SERIES, SWEEP_SERIES, _phase_colors


class TestPlotSpec:
    def test_rejects_unknown_normalization(self):
        with pytest.raises(PlotDataError, match="normalization"):
            PlotSpec(inputs=("a.csv",), normalization="maybe")

    def test_global_max_needs_inputs(self):
        with pytest.raises(PlotDataError, match="at least one input"):
            PlotSpec(normalization="global-max")

    @pytest.mark.parametrize("threshold", [0.0, -0.2, 1.2])
    def test_rejects_threshold_outside_unit_interval(self, threshold):
        with pytest.raises(PlotDataError, match="threshold"):
            PlotSpec(inputs=("a.csv",), threshold=threshold)


class TestPhaseColors:
    def test_zero_phase_full_saturation_is_red(self):
        rgb = _phase_colors(np.array([0.0]), np.array([1.0]))
        assert np.allclose(rgb[0], [1.0, 0.0, 0.0])

    def test_thirds_of_the_wheel_hit_green_and_blue(self):
        rgb = _phase_colors(np.array([2 * np.pi / 3, 4 * np.pi / 3]),
                            np.array([1.0, 1.0]))
        assert np.allclose(rgb[0], [0.0, 1.0, 0.0], atol=1e-12)
        assert np.allclose(rgb[1], [0.0, 0.0, 1.0], atol=1e-12)

    def test_zero_saturation_is_white_for_any_phase(self):
        rgb = _phase_colors(np.array([0.4, 2.9, 5.5]), np.zeros(3))
        assert np.allclose(rgb, 1.0)

    def test_phase_wraps_modulo_two_pi(self):
        a = _phase_colors(np.array([0.7]), np.array([0.8]))
        b = _phase_colors(np.array([0.7 + 2 * np.pi]), np.array([0.8]))
        assert np.allclose(a, b)

    def test_saturation_above_one_is_clipped(self):
        rgb = _phase_colors(np.array([0.0]), np.array([1.7]))
        assert np.allclose(rgb[0], [1.0, 0.0, 0.0])


class TestPlotCurves:
    def test_sweep_csv_draws_all_six_series(self, sweep_csv):
        fig = plot_curves(sweep_csv, PlotSpec(inputs=(sweep_csv,)))
        ax = fig.axes[0]
        assert len(ax.lines) == len(SWEEP_SERIES)
        labels = [line.get_label() for line in ax.lines]
        assert labels == list(SWEEP_SERIES)
        assert ax.get_xlabel() == "Pulse area (π)"

    def test_area_scan_csv_draws_four_amplitude_series(self, tmp_path):
        path = tmp_path / "scan.csv"
        write_area_scan_csv(path)
        fig = plot_curves(str(path), PlotSpec(inputs=(str(path),)))
        labels = [line.get_label() for line in fig.axes[0].lines]
        assert labels == list(AREA_SCAN_SERIES)

    def test_unrecognized_first_column_is_refused(self, tmp_path):
        path = tmp_path / "odd.csv"
        path.write_text("frequency,a\n1.0,2.0\n")
        with pytest.raises(PlotDataError, match="neither"):
            plot_curves(str(path), PlotSpec(inputs=(str(path),)))

    def test_missing_series_column_is_refused(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("theta_over_pi,pop0\n1.0,0.5\n")
        with pytest.raises(PlotDataError, match="pop1"):
            plot_curves(str(path), PlotSpec(inputs=(str(path),)))

    def test_figure_carries_normalization_metadata(self, sweep_csv):
        fig = plot_curves(sweep_csv, PlotSpec(inputs=(sweep_csv,)))
        assert fig.artifact_metadata == {"normalization": "per-spectrum"}


def _render_rgba(fig) -> np.ndarray:
    canvas = FigureCanvasAgg(fig)
    canvas.draw()
    return np.asarray(canvas.buffer_rgba()).copy()


class TestPlotSpectrum:
    def test_amplitude_map_renders_one_panel(self, spectrum_vbg):
        fig = plot_spectrum([spectrum_vbg],
                            PlotSpec(inputs=(spectrum_vbg,)))
        assert len(fig.axes) == 1
        ax = fig.axes[0]
        assert ax.get_xlabel() == "omega_t_mev (meV)"
        assert ax.get_ylabel() == "omega_tau_mev (meV)"
        assert ax.get_ylim()[0] < 0.0

    def test_one_panel_per_input(self, tmp_path):
        paths = []
        for k in range(3):
            values, axes = blob_spectrum(peak=1.0 - 0.2 * k)
            p = tmp_path / f"s{k}.vbg"
            write_grid_file(p, values, axes)
            paths.append(str(p))
        fig = plot_spectrum(paths, PlotSpec(inputs=tuple(paths)))
        assert len(fig.axes) == 3

    def test_refuses_empty_input_list(self):
        with pytest.raises(PlotDataError, match="at least one"):
            plot_spectrum([], PlotSpec(inputs=("x.vbg",)))

    def test_refuses_non_2d_grid(self, tmp_path):
        path = tmp_path / "line.vbg"
        write_grid_file(path, np.zeros(5), [["x", np.arange(5.0)]])
        with pytest.raises(PlotDataError, match="2-d"):
            plot_spectrum([str(path)], PlotSpec(inputs=(str(path),)))

    def test_phase_mode_carries_hue_legend(self, spectrum_vbg):
        spec = PlotSpec(inputs=(spectrum_vbg,), color="phase")
        fig = plot_spectrum([spectrum_vbg], spec)
        assert fig._suptitle.get_text() == HUE_LEGEND

    def test_phase_mode_zero_phase_blob_renders_red(self, tmp_path):
        values, axes = blob_spectrum(phase=0.0)
        path = tmp_path / "s.vbg"
        write_grid_file(path, values, axes)
        spec = PlotSpec(inputs=(str(path),), color="phase")
        fig = plot_spectrum([str(path)], spec)
        img = fig.axes[0].images[0].get_array()
        peak = np.unravel_index(np.abs(values).argmax(), values.shape)
        assert np.allclose(img[peak], [1.0, 0.0, 0.0], atol=1e-12)

    def test_global_norm_dims_the_weaker_panel(self, tmp_path):
        strong = tmp_path / "strong.vbg"
        weak = tmp_path / "weak.vbg"
        for path, peak in ((strong, 1.0), (weak, 0.5)):
            values, axes = blob_spectrum(phase=0.0, peak=peak)
            write_grid_file(path, values, axes)
        paths = (str(strong), str(weak))

        per = plot_spectrum(paths, PlotSpec(inputs=paths, color="phase"))
        shared = plot_spectrum(paths, PlotSpec(inputs=paths, color="phase",
                                               normalization="global-max"))
        # Saturation shows up as 1 - (green channel) for zero phase.
        per_sat = 1.0 - per.axes[1].images[0].get_array()[..., 1].min()
        shared_sat = 1.0 - shared.axes[1].images[0].get_array()[..., 1].min()
        assert per_sat == pytest.approx(1.0, abs=1e-12)
        assert shared_sat == pytest.approx(0.5, abs=1e-12)

    def test_rendering_is_deterministic(self, spectrum_vbg):
        spec = PlotSpec(inputs=(spectrum_vbg,), color="phase")
        first = _render_rgba(plot_spectrum([spectrum_vbg], spec))
        second = _render_rgba(plot_spectrum([spectrum_vbg], spec))
        assert np.array_equal(first, second)

    def test_saved_png_embeds_normalization(self, spectrum_vbg, tmp_path):
        out = tmp_path / "map.png"
        spec = PlotSpec(inputs=(spectrum_vbg,), normalization="global-max")
        save_figure(plot_spectrum([spectrum_vbg], spec), str(out))
        with Image.open(out) as image:
            assert image.info["normalization"] == "global-max"


class TestPlotPhaseScatter:
    def test_keeps_rows_above_threshold(self, control_csv):
        spec = PlotSpec(inputs=(control_csv,), threshold=0.7)
        fig = plot_phase_scatter(control_csv, spec)
        scatter = fig.axes[0].collections[0]
        FigureCanvasAgg(fig).draw()
        assert scatter.get_facecolor().shape[0] == 3

    def test_threshold_one_keeps_only_the_maximum(self, control_csv):
        spec = PlotSpec(inputs=(control_csv,), threshold=1.0)
        fig = plot_phase_scatter(control_csv, spec)
        scatter = fig.axes[0].collections[0]
        FigureCanvasAgg(fig).draw()
        assert scatter.get_facecolor().shape[0] == 1

    def test_empty_selection_warns_and_draws_nothing(self, tmp_path):
        path = tmp_path / "dark.csv"
        write_control_csv(path, [(0.9, 0.9, 0.9, 0.0, 0.0)])
        spec = PlotSpec(inputs=(str(path),), threshold=0.7)
        with pytest.warns(UserWarning, match="figure is empty"):
            fig = plot_phase_scatter(str(path), spec)
        assert not fig.axes[0].collections

    def test_unknown_peak_is_refused(self, control_csv):
        spec = PlotSpec(inputs=(control_csv,), peak="P9")
        with pytest.raises(PlotDataError, match="I_P9"):
            plot_phase_scatter(control_csv, spec)

    def test_axes_are_labeled_in_pulse_areas(self, control_csv):
        fig = plot_phase_scatter(control_csv,
                                 PlotSpec(inputs=(control_csv,)))
        ax = fig.axes[0]
        assert ax.get_xlabel() == "Θ1 (π)"
        assert ax.get_zlabel() == "Θ3 (π)"
