"""Command-line entry point: run experiments from a config file.

Each subcommand reads a JSON configuration (``--config``), runs the
matching experiment, and writes its artifacts into the output directory:
CSV files for curves and tables, grid files for 2D data, and a
``run_manifest.json`` recording the echoed configuration, build
identifiers, wall time, and checkpoint state.  Scans checkpoint one tau
row at a time, so an interrupted run rerun with ``--resume`` recomputes
only the missing rows and the final artifacts are byte-identical to an
uninterrupted run's.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np
import scipy

from . import __version__
from .analysis import (
    PEAK_LABELS,
    VisibilityError,
    control_search,
    locate_peaks,
    peak_visibility,
    phase_map,
    theta1_scan,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .core import InvalidStateError
from .gridfile import GridFile, GridFileError, grid_csv_rows, read_grid, \
    write_grid
from .obe import IntegrationError
from .singlepulse import sweep_pulse_area
from .twodcs import scan_rephasing, spectrum_2d

SWEEP_COLUMNS = ("theta_over_pi", "pop0", "pop1", "pop2",
                 "coh01", "coh02", "coh12")
SWEEP_UNITS = ("# units: theta_over_pi=pi, pop*=occupation probability, "
               "coh*=coherence magnitude")


def _write_csv(path: str, comment: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(comment + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _fmt(x: float) -> str:
    return repr(float(x))


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _Artifacts:
    """Collects written files and checkpoint counters for the manifest."""

    def __init__(self, outdir: str):
        self.outdir = outdir
        self.paths: list[str] = []
        self.checkpoint: dict = {}
        self.notes: list[str] = []

    def add(self, path: str) -> str:
        self.paths.append(path)
        return path

    def manifest_entry(self) -> dict:
        return {
            os.path.relpath(p, self.outdir): {
                "bytes": os.path.getsize(p),
                "sha256": _sha256(p),
            }
            for p in self.paths
        }


def _excitation_meta(excitation) -> dict:
    return {
        "areas_rad": [float(a) for a in excitation.areas],
        "fwhm_fs": excitation.fwhm,
        "detection": excitation.detection,
        "params": asdict(excitation.params),
    }


def _run_single_sweep(cfg: RunConfig, art: _Artifacts) -> None:
    exp = cfg.experiment
    sweep = sweep_pulse_area(exp.theta_grid(), exp.fwhm_fs, cfg.system,
                             cfg.solver, readout=exp.readout)
    rows = (
        [_fmt(th / math.pi), _fmt(p0), _fmt(p1), _fmt(p2),
         _fmt(c01), _fmt(c02), _fmt(c12)]
        for th, p0, p1, p2, c01, c02, c12 in zip(
            sweep.areas, sweep.pop0, sweep.pop1, sweep.pop2,
            sweep.coh01, sweep.coh02, sweep.coh12)
    )
    path = os.path.join(art.outdir, "single_sweep.csv")
    _write_csv(path, SWEEP_UNITS, SWEEP_COLUMNS, rows)
    art.add(path)


def _scan_with_checkpoint(cfg: RunConfig, art: _Artifacts, areas,
                          detection: str):
    exp = cfg.experiment
    ckpt = os.path.join(art.outdir, "checkpoint")
    reused = 0
    if os.path.isdir(ckpt):
        reused = sum(1 for name in os.listdir(ckpt)
                     if name.startswith("row_") and name.endswith(".npy"))

    grid = exp.delays.build()
    tgrid = scan_rephasing(grid, areas, exp.fwhm_fs, cfg.system, cfg.solver,
                           detection=detection, checkpoint_dir=ckpt,
                           workers=cfg.workers)
    total = grid.tau_axis.size
    reused = min(reused, total)
    art.checkpoint = {
        "directory": os.path.relpath(ckpt, art.outdir),
        "rows_total": total,
        "rows_computed": total - reused,
        "rows_reused": reused,
    }
    if reused == total:
        art.notes.append("all rows were already present; nothing recomputed")
    return tgrid


def _run_spectrum(cfg: RunConfig, art: _Artifacts) -> None:
    exp = cfg.experiment
    areas = tuple(a * math.pi for a in exp.areas_pi)
    tgrid = _scan_with_checkpoint(cfg, art, areas, exp.detection)
    spec = spectrum_2d(tgrid, exp.zero_pad_factor, exp.window_rate_mev)

    if cfg.output.wants_grid:
        tg_file = GridFile(
            values=tgrid.values, kind="time_domain",
            axes={"tau_fs": tgrid.axes.tau_axis,
                  "t_fs": tgrid.axes.t_axis},
            units={"tau_fs": "fs", "t_fs": "fs", "values": "au"},
            meta={"T_fs": tgrid.axes.T_fixed,
                  "excitation": _excitation_meta(tgrid.excitation)})
        path = os.path.join(art.outdir, "time_domain.vbg")
        write_grid(path, tg_file)
        art.add(path)

        sp_file = GridFile(
            values=spec.values, kind="spectrum",
            axes={"omega_tau_mev": spec.omega_tau_axis,
                  "omega_t_mev": spec.omega_t_axis},
            units={"omega_tau_mev": "meV", "omega_t_mev": "meV",
                   "values": "au"},
            meta={"zero_pad_factor": spec.meta["zero_pad_factor"],
                  "window_rate_mev": spec.meta["window_rate"],
                  "T_fs": spec.meta["T_fixed"],
                  "excitation": _excitation_meta(spec.meta["excitation"])})
        path = os.path.join(art.outdir, "spectrum.vbg")
        write_grid(path, sp_file)
        art.add(path)

    if cfg.output.wants_csv:
        peaks = locate_peaks(spec, cfg.system)
        try:
            pv = peak_visibility(peaks)
        except VisibilityError:
            pv = [float("nan")] * len(peaks)
            art.notes.append("all-zero spectrum: visibility undefined")
        path = os.path.join(art.outdir, "peaks.csv")
        _write_csv(
            path, "# units: omega*=meV, amplitude=au, phase=rad, "
            "visibility=percent",
            ("label", "omega_tau_mev", "omega_t_mev", "amplitude",
             "phase_rad", "visibility_pct"),
            ([p.label, _fmt(p.found_center[0]), _fmt(p.found_center[1]),
              _fmt(p.max_amplitude), _fmt(p.phase_at_max), _fmt(v)]
             for p, v in zip(peaks, pv)))
        art.add(path)


def _run_theta1_scan(cfg: RunConfig, art: _Artifacts) -> None:
    exp = cfg.experiment
    result = theta1_scan(exp.theta1_grid(), exp.delays.build(), exp.fwhm_fs,
                         cfg.system, cfg.solver,
                         fixed_area=exp.fixed_area_pi * math.pi,
                         detection=exp.detection,
                         zero_pad_factor=exp.zero_pad_factor,
                         window_rate=exp.window_rate_mev)
    header = ["theta1_over_pi"]
    header += [f"amp_{l}" for l in result.labels]
    header += [f"phase_{l}_rad" for l in result.labels]
    rows = (
        [_fmt(result.theta1[i] / math.pi)]
        + [_fmt(a) for a in result.amplitudes[i]]
        + [_fmt(p) for p in result.phases[i]]
        for i in range(result.theta1.size)
    )
    path = os.path.join(art.outdir, "theta1_scan.csv")
    _write_csv(path, "# units: theta1_over_pi=pi, amp_*=au, phase_*=rad",
               header, rows)
    art.add(path)


def _run_control_search(cfg: RunConfig, art: _Artifacts,
                        resume: bool) -> None:
    exp = cfg.experiment
    out_path = os.path.join(art.outdir, "control_search.csv")
    # an existing matching file is always resumed rather than recomputed;
    # the fingerprint sidecar guards against silently mixing configurations
    use_resume = resume or os.path.exists(out_path)
    g1, g2, g3 = exp.theta_grids()
    counters = {"computed": 0}

    def progress(done, total):
        counters["computed"] += 1

    result = control_search(
        g1, g2, g3, exp.theta4_pi * math.pi, grid=exp.delays.build(),
        fwhm=exp.fwhm_fs, params=cfg.system, opts=cfg.solver,
        detection=exp.detection, zero_pad_factor=exp.zero_pad_factor,
        window_rate=exp.window_rate_mev, budget=exp.budget,
        out_path=out_path, resume=use_resume, progress_callback=progress)
    art.add(out_path)
    art.add(out_path + ".meta.json")
    total = result.thetas.shape[0]
    art.checkpoint = {
        "directory": ".",
        "rows_total": total,
        "rows_computed": counters["computed"],
        "rows_reused": total - counters["computed"],
    }
    if counters["computed"] == 0:
        art.notes.append("all rows were already present; nothing recomputed")


def _run_phase_map(cfg: RunConfig, art: _Artifacts) -> None:
    exp = cfg.experiment
    result = phase_map(exp.peak, exp.theta1_grid(), exp.theta2_pi * math.pi,
                       exp.theta3_pi * math.pi, exp.threshold,
                       exp.delays.build(), exp.fwhm_fs, cfg.system,
                       cfg.solver, theta4=exp.theta4_pi * math.pi,
                       detection=exp.detection,
                       zero_pad_factor=exp.zero_pad_factor,
                       window_rate=exp.window_rate_mev)
    rows = (
        [_fmt(result.theta1[i] / math.pi), _fmt(result.intensity[i]),
         _fmt(result.phase[i])]
        for i in range(result.theta1.size)
    )
    path = os.path.join(art.outdir, "phase_map.csv")
    _write_csv(path, "# units: theta1_over_pi=pi, intensity=au, phase=rad",
               ("theta1_over_pi", f"intensity_{result.label}",
                f"phase_{result.label}_rad"), rows)
    art.add(path)
    if result.note:
        art.notes.append(result.note)
    art.checkpoint = {"phase_span_rad": result.phase_span}


def _run_export(args) -> int:
    grid = read_grid(args.gridfile)
    out = args.out or (os.path.splitext(args.gridfile)[0] + ".csv")
    units = ", ".join(f"{k}={v}" for k, v in grid.units.items()) or "au"
    _write_csv(out, f"# units: {units}", *_split_rows(grid_csv_rows(grid)))
    print(out)
    print("complete")
    return 0


def _split_rows(rows):
    it = iter(rows)
    return next(it), it


_RUNNERS = {
    "single_sweep": _run_single_sweep,
    "spectrum": _run_spectrum,
    "theta1_scan": _run_theta1_scan,
    "control_search": _run_control_search,
    "phase_map": _run_phase_map,
}


def run(cfg: RunConfig, resume: bool = False) -> dict:
    """Execute one configured experiment and write its artifacts.

    Returns the manifest dictionary (also written to
    ``run_manifest.json`` in the output directory).
    """
    outdir = cfg.output.directory
    os.makedirs(outdir, exist_ok=True)
    art = _Artifacts(outdir)
    kind = cfg.experiment.kind

    start = time.perf_counter()
    if kind == "control_search":
        _run_control_search(cfg, art, resume)
    else:
        _RUNNERS[kind](cfg, art)
    wall = time.perf_counter() - start

    manifest = {
        "experiment": kind,
        "status": "complete",
        "config": cfg.echo(),
        "build": {
            "package": "vbloch",
            "version": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": wall,
        "checkpoint": art.checkpoint,
        "notes": art.notes,
        "artifacts": art.manifest_entry(),
    }
    path = os.path.join(outdir, "run_manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vbloch",
        description="V-type three-level system: pulse-area sweeps and "
                    "phase-cycled 2D coherent spectra.")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_command(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--workers", type=int,
                       help="worker processes (overrides config)")
        p.add_argument("--resume", action="store_true",
                       help="reuse checkpointed rows from a previous run")
        p.add_argument("--format", choices=("csv", "grid", "both"),
                       help="artifact formats (overrides config)")
        return p

    experiment_command("single-sweep",
                       "populations and coherences vs pulse area")
    experiment_command("spectrum", "one phase-cycled rephasing 2D spectrum")
    experiment_command("theta1-scan",
                       "peak amplitudes vs the first pulse area")
    experiment_command("control-search",
                       "peak visibilities over an area-triple grid")
    experiment_command("phase-map",
                       "peak phase along a first-area sweep")

    exp = sub.add_parser("export", help="convert a grid file to CSV")
    exp.add_argument("gridfile", help="input grid file")
    exp.add_argument("--out", help="output CSV path")
    return parser


def _load_for_command(args) -> RunConfig:
    kind = args.command.replace("-", "_")
    if args.config:
        cfg = load_config(args.config)
        if cfg.experiment.kind != kind:
            raise ConfigError(
                f"config describes a {cfg.experiment.kind!r} experiment but "
                f"the {args.command!r} subcommand was invoked")
    else:
        cfg = parse_config(json.dumps({"experiment": {"kind": kind}}))
    if args.out is not None:
        cfg.output.directory = args.out
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("workers must be at least 1")
        cfg.workers = args.workers
    if args.format is not None:
        cfg.output.format = args.format
    return cfg


def _error_record(err: Exception, outdir: str | None) -> None:
    record = {"error": {"type": type(err).__name__, "message": str(err)}}
    print(json.dumps(record), file=sys.stderr)
    if outdir:
        try:
            os.makedirs(outdir, exist_ok=True)
            with open(os.path.join(outdir, "error.json"), "w",
                      encoding="utf-8") as fh:
                json.dump(record, fh, indent=1)
        except OSError:
            pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # for export --out names a CSV file, not an error-record directory
    outdir = getattr(args, "out", None) if args.command != "export" else None
    try:
        if args.command == "export":
            return _run_export(args)
        cfg = _load_for_command(args)
        outdir = cfg.output.directory
        manifest = run(cfg, resume=args.resume)
        for name in manifest["artifacts"]:
            print(os.path.join(cfg.output.directory, name))
        for note in manifest["notes"]:
            print(note)
        print("complete")
        return 0
    except (VisibilityError, IntegrationError, InvalidStateError,
            FloatingPointError) as err:
        _error_record(err, outdir)
        return 3
    except (ConfigError, json.JSONDecodeError, ValueError) as err:
        # config layer or domain validation below it
        _error_record(err, outdir)
        return 2
    except (GridFileError, OSError) as err:
        _error_record(err, outdir)
        return 4


if __name__ == "__main__":
    sys.exit(main())
