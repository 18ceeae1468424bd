"""Validated run configuration for the command-line interface.

A run is described by a JSON document with up to five top-level sections:

``system``
    Any subset of the physical parameters (meV units); omitted fields
    keep the potassium-like defaults.
``solver``
    Any subset of the integrator options.
``experiment``
    Required.  ``kind`` selects one of single_sweep, spectrum,
    theta1_scan, control_search, or phase_map; the remaining keys are the
    kind's parameters (areas in pi units, delays in fs).
``output``
    ``directory`` for artifacts and ``format`` (csv, grid, or both).
``workers``
    Worker processes for row-parallel scans; defaults to the machine's
    available parallelism.

Parsing is fail-closed: any key the schema does not know is an error, as
is any physically inconsistent value, and the error names the offending
key and its line in the source text.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .core import SystemParams
from .obe import DEFAULT_OPTIONS, SolverOptions
from .twodcs import DelayGrid
from .analysis import PEAK_LABELS

EXPERIMENT_KINDS = ("single_sweep", "spectrum", "theta1_scan",
                    "control_search", "phase_map")
OUTPUT_FORMATS = ("csv", "grid", "both")
DETECTION_MODES = ("population", "emission_weighted")


class ConfigError(ValueError):
    """Configuration rejected; carries the offending key and source line."""

    def __init__(self, message: str, key: str | None = None,
                 line: int | None = None):
        prefix = ""
        if line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)
        self.key = key
        self.line = line


@dataclass
class OutputConfig:
    directory: str = "."
    format: str = "both"

    @property
    def wants_csv(self) -> bool:
        return self.format in ("csv", "both")

    @property
    def wants_grid(self) -> bool:
        return self.format in ("grid", "both")


@dataclass
class DelaySpec:
    """Delay-grid parameters shared by every 2D experiment."""

    tau_points: int = 64
    tau_step_fs: float = 40.0
    T_fs: float = 200.0
    t_points: int = 64
    t_step_fs: float = 40.0

    def build(self) -> DelayGrid:
        tau = np.arange(self.tau_points) * self.tau_step_fs
        t = np.arange(self.t_points) * self.t_step_fs
        return DelayGrid(tau_axis=tau, T_fixed=self.T_fs, t_axis=t)


@dataclass
class SingleSweepSpec:
    kind: str = "single_sweep"
    fwhm_fs: float = 85.0
    theta_start_pi: float = 0.0
    theta_stop_pi: float = 5.0
    theta_points: int = 250
    readout: str = "epoch"

    def theta_grid(self) -> np.ndarray:
        return np.linspace(self.theta_start_pi, self.theta_stop_pi,
                           self.theta_points, endpoint=False) * math.pi


@dataclass
class SpectrumSpec:
    kind: str = "spectrum"
    fwhm_fs: float = 85.0
    areas_pi: tuple = (0.1, 0.1, 0.1, 0.1)
    delays: DelaySpec = field(default_factory=DelaySpec)
    detection: str = "population"
    zero_pad_factor: int = 2
    window_rate_mev: float | None = None


@dataclass
class Theta1ScanSpec:
    kind: str = "theta1_scan"
    fwhm_fs: float = 85.0
    theta1_grid_pi: tuple = tuple(round(0.1 * k, 10) for k in range(1, 24))
    fixed_area_pi: float = 0.1
    delays: DelaySpec = field(default_factory=DelaySpec)
    detection: str = "population"
    zero_pad_factor: int = 2
    window_rate_mev: float | None = None

    def theta1_grid(self) -> np.ndarray:
        return np.asarray(self.theta1_grid_pi, dtype=float) * math.pi


@dataclass
class ControlSearchSpec:
    kind: str = "control_search"
    fwhm_fs: float = 85.0
    theta1_grid_pi: tuple = (1.1,)
    theta2_grid_pi: tuple = (0.9,)
    theta3_grid_pi: tuple = (0.9,)
    theta4_pi: float = 0.1
    budget: int = 512
    delays: DelaySpec = field(default_factory=DelaySpec)
    detection: str = "population"
    zero_pad_factor: int = 2
    window_rate_mev: float | None = None

    def theta_grids(self) -> tuple:
        return tuple(np.asarray(g, dtype=float) * math.pi
                     for g in (self.theta1_grid_pi, self.theta2_grid_pi,
                               self.theta3_grid_pi))


@dataclass
class PhaseMapSpec:
    kind: str = "phase_map"
    peak: str = "P4"
    fwhm_fs: float = 85.0
    theta1_grid_pi: tuple = tuple(round(0.5 + 0.1 * k, 10)
                                  for k in range(17))
    theta2_pi: float = 0.9
    theta3_pi: float = 0.9
    theta4_pi: float = 0.1
    threshold: float = 0.7
    delays: DelaySpec = field(default_factory=DelaySpec)
    detection: str = "population"
    zero_pad_factor: int = 2
    window_rate_mev: float | None = None

    def theta1_grid(self) -> np.ndarray:
        return np.asarray(self.theta1_grid_pi, dtype=float) * math.pi


_EXPERIMENT_SPECS = {
    "single_sweep": SingleSweepSpec,
    "spectrum": SpectrumSpec,
    "theta1_scan": Theta1ScanSpec,
    "control_search": ControlSearchSpec,
    "phase_map": PhaseMapSpec,
}


@dataclass
class RunConfig:
    system: SystemParams
    solver: SolverOptions
    experiment: object
    output: OutputConfig
    workers: int

    def echo(self) -> dict:
        """JSON-ready copy of the validated configuration."""
        from dataclasses import asdict
        exp = asdict(self.experiment)
        for k, v in exp.items():
            if isinstance(v, tuple):
                exp[k] = list(v)
        if "delays" in exp:
            # the input schema keeps delay keys inline, so flatten them
            # back out; the echo must itself parse as a valid configuration
            exp.update(exp.pop("delays"))
        return {
            "system": asdict(self.system),
            "solver": asdict(self.solver),
            "experiment": exp,
            "output": {"directory": self.output.directory,
                       "format": self.output.format},
            "workers": self.workers,
        }


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, row in enumerate(text.splitlines(), start=1):
        if needle in row:
            return i
    return None


def _reject_unknown(section: dict, allowed, section_name: str, text: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in {section_name!r} section; "
                f"allowed keys: {', '.join(sorted(allowed))}",
                key=key, line=_line_of(text, key))


def _build_dataclass(cls, section: dict, section_name: str, text: str):
    allowed = {f.name for f in fields(cls)}
    _reject_unknown(section, allowed, section_name, text)
    try:
        return cls(**section)
    except (TypeError, ValueError) as err:
        key = next(iter(section), None)
        raise ConfigError(f"invalid {section_name!r} section: {err}",
                          key=key, line=_line_of(text, section_name)) from err


def _coerce_scalar(name: str, value, kinds, text: str,
                   minimum=None, integer=False):
    accepted = (int, float) if integer else kinds
    if isinstance(value, bool) or not isinstance(value, accepted):
        raise ConfigError(
            f"{name} must be a number, got {value!r}",
            key=name, line=_line_of(text, name))
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}",
                          key=name, line=_line_of(text, name))
    if minimum is not None and value < minimum:
        raise ConfigError(
            f"{name} must be at least {minimum}, got {value!r}",
            key=name, line=_line_of(text, name))
    return int(value) if integer else float(value)


def _parse_experiment(section: dict, system: SystemParams, text: str):
    if "kind" not in section:
        raise ConfigError("experiment section needs a 'kind' key",
                          key="kind", line=_line_of(text, "experiment"))
    kind = section["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"unknown experiment kind {kind!r}; one of "
            f"{', '.join(EXPERIMENT_KINDS)}",
            key="kind", line=_line_of(text, "kind"))

    cls = _EXPERIMENT_SPECS[kind]
    body = dict(section)
    allowed = {f.name for f in fields(cls)} - {"delays"}
    delay_keys = {f.name for f in fields(DelaySpec)}
    _reject_unknown(body, allowed | delay_keys, "experiment", text)

    delay_section = {k: body.pop(k) for k in list(body) if k in delay_keys}
    for name in ("tau_points", "t_points"):
        if name in delay_section:
            delay_section[name] = _coerce_scalar(
                name, delay_section[name], (int,), text, minimum=1,
                integer=True)
    for name in ("tau_step_fs", "t_step_fs"):
        if name in delay_section:
            delay_section[name] = _coerce_scalar(
                name, delay_section[name], (int, float), text, minimum=1e-9)
    if "T_fs" in delay_section:
        delay_section["T_fs"] = _coerce_scalar(
            "T_fs", delay_section["T_fs"], (int, float), text, minimum=0.0)

    for name in ("fwhm_fs",):
        if name in body:
            body[name] = _coerce_scalar(name, body[name], (int, float),
                                        text, minimum=1e-9)
    for name in ("theta4_pi", "fixed_area_pi", "theta2_pi", "theta3_pi",
                 "theta_start_pi", "theta_stop_pi", "threshold"):
        if name in body:
            body[name] = _coerce_scalar(name, body[name], (int, float),
                                        text, minimum=0.0)
    for name in ("theta_points", "zero_pad_factor", "budget"):
        if name in body:
            body[name] = _coerce_scalar(name, body[name], (int,), text,
                                        minimum=1, integer=True)
    for name in ("areas_pi", "theta1_grid_pi", "theta2_grid_pi",
                 "theta3_grid_pi"):
        if name in body:
            value = body[name]
            if (not isinstance(value, (list, tuple)) or len(value) == 0
                    or not all(isinstance(v, (int, float))
                               and not isinstance(v, bool) for v in value)):
                raise ConfigError(
                    f"{name} must be a nonempty list of numbers",
                    key=name, line=_line_of(text, name))
            body[name] = tuple(float(v) for v in value)
    if "detection" in body and body["detection"] not in DETECTION_MODES:
        raise ConfigError(
            f"detection must be one of {', '.join(DETECTION_MODES)}, got "
            f"{body['detection']!r}",
            key="detection", line=_line_of(text, "detection"))
    if "peak" in body and body["peak"] not in PEAK_LABELS:
        raise ConfigError(
            f"peak must be one of {', '.join(PEAK_LABELS)}, got "
            f"{body['peak']!r}",
            key="peak", line=_line_of(text, "peak"))
    if kind == "spectrum" and "areas_pi" in body and len(body["areas_pi"]) != 4:
        raise ConfigError("areas_pi must list exactly four pulse areas",
                          key="areas_pi", line=_line_of(text, "areas_pi"))
    if "window_rate_mev" in body and body["window_rate_mev"] is not None:
        body["window_rate_mev"] = _coerce_scalar(
            "window_rate_mev", body["window_rate_mev"], (int, float), text,
            minimum=0.0)

    if kind == "single_sweep":
        spec = _build_dataclass(cls, body, "experiment", text)
    else:
        delays = _build_dataclass(DelaySpec, delay_section, "experiment",
                                  text)
        try:
            grid = delays.build()
            grid.check_nyquist(system.delta)
        except ValueError as err:
            key = ("tau_step_fs" if "tau" in str(err) else "t_step_fs")
            raise ConfigError(str(err), key=key,
                              line=_line_of(text, key)) from err
        spec = _build_dataclass(cls, {**body, "delays": delays},
                                "experiment", text)
    return spec


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"not valid JSON: {err.msg}",
                          line=err.lineno) from err
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")

    _reject_unknown(doc, {"system", "solver", "experiment", "output",
                          "workers"}, "top-level", text)
    if "experiment" not in doc:
        raise ConfigError("configuration needs an 'experiment' section",
                          key="experiment")

    system_sec = doc.get("system", {})
    if not isinstance(system_sec, dict):
        raise ConfigError("'system' must be an object", key="system",
                          line=_line_of(text, "system"))
    system = _build_dataclass(SystemParams, system_sec, "system", text)

    solver_sec = doc.get("solver", {})
    if not isinstance(solver_sec, dict):
        raise ConfigError("'solver' must be an object", key="solver",
                          line=_line_of(text, "solver"))
    solver = (_build_dataclass(SolverOptions, solver_sec, "solver", text)
              if solver_sec else DEFAULT_OPTIONS)

    if not isinstance(doc["experiment"], dict):
        raise ConfigError("'experiment' must be an object", key="experiment",
                          line=_line_of(text, "experiment"))
    experiment = _parse_experiment(doc["experiment"], system, text)

    output_sec = doc.get("output", {})
    if not isinstance(output_sec, dict):
        raise ConfigError("'output' must be an object", key="output",
                          line=_line_of(text, "output"))
    output = _build_dataclass(OutputConfig, output_sec, "output", text)
    if output.format not in OUTPUT_FORMATS:
        raise ConfigError(
            f"format must be one of {', '.join(OUTPUT_FORMATS)}, got "
            f"{output.format!r}",
            key="format", line=_line_of(text, "format"))

    workers = doc.get("workers", os.cpu_count() or 1)
    workers = _coerce_scalar("workers", workers, (int,), text, minimum=1,
                             integer=True)

    return RunConfig(system=system, solver=solver, experiment=experiment,
                     output=output, workers=workers)


def load_config(path: str) -> RunConfig:
    """Read and parse a configuration file."""
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
