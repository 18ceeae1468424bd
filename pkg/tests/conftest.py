"""Shared pytest configuration: acceptance summary reporting.

Tests marked ``@pytest.mark.acceptance(num, title)`` are aggregated into
one PASS/FAIL line per numbered check, printed after the normal summary.
The bookkeeping lives on the config object and is guarded so a sibling
test tree with the same hooks shares it instead of printing twice.
"""

import pytest


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
