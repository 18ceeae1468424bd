"""Fixtures building synthetic artifact files for the rendering tests.

The acceptance-marker hooks mirror the simulation suite's so a combined
run aggregates every numbered check into one summary block; the guards
on the config attributes keep the two conftests from printing twice.
"""

import pytest
from artifactgen import (blob_spectrum, write_control_csv, write_grid_file,
                         write_sweep_csv)


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(num, title): deliverable acceptance check; aggregated "
        "into one summary line per number")
    if not hasattr(config, "_acceptance_index"):
        config._acceptance_index = {}
        config._acceptance_results = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            num, title = marker.args
            config._acceptance_index[item.nodeid] = (num, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    key = item.config._acceptance_index.get(item.nodeid)
    if key is None:
        return
    if report.when in ("setup", "call") and report.outcome == "failed":
        item.config._acceptance_results.setdefault(key, []).append(False)
    elif report.when == "call" and report.outcome == "passed":
        item.config._acceptance_results.setdefault(key, []).append(True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", None)
    if not results or getattr(config, "_acceptance_printed", False):
        return
    config._acceptance_printed = True
    terminalreporter.section("acceptance checks")
    for (num, title) in sorted(results):
        verdict = "PASS" if all(results[(num, title)]) else "FAIL"
        terminalreporter.write_line(f"acceptance {num:>2}  {verdict}  {title}")


@pytest.fixture
def sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path)
    return str(path)


@pytest.fixture
def spectrum_vbg(tmp_path):
    values, axes = blob_spectrum()
    path = tmp_path / "spectrum.vbg"
    write_grid_file(path, values, axes,
                    units={"omega_tau_mev": "meV", "omega_t_mev": "meV",
                           "values": "au"})
    return str(path)


@pytest.fixture
def control_csv(tmp_path):
    path = tmp_path / "search.csv"
    write_control_csv(path, [
        (0.9, 0.9, 0.9, 1.00, 0.3),
        (1.1, 0.9, 0.9, 0.85, 1.9),
        (1.3, 0.9, 0.9, 0.74, 3.1),
        (1.5, 0.7, 0.9, 0.40, -0.8),
        (1.7, 0.9, 0.7, 0.05, 2.2),
    ])
    return str(path)
