"""Shared pytest wiring.

Tests marked with @pytest.mark.criterion("name") get one summary line
each ("ACCEPTANCE <name>: PASSED/FAILED/SKIPPED") after the run, so the
gate's outcome is readable without scrolling through the full log.
"""

import pytest

_ACCEPTANCE: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion reported in the summary"
    )


def _skip_status(report) -> str:
    reason = ""
    if isinstance(report.longrepr, tuple):
        reason = report.longrepr[2]
        if reason.startswith("Skipped: "):
            reason = reason[len("Skipped: "):]
    return f"SKIPPED ({reason})" if reason else "SKIPPED"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call":
        if report.skipped:
            _ACCEPTANCE[name] = _skip_status(report)
        else:
            _ACCEPTANCE[name] = "PASSED" if report.passed else "FAILED"
    elif report.when == "setup" and (report.skipped or report.failed):
        _ACCEPTANCE[name] = _skip_status(report) if report.skipped else "FAILED"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _ACCEPTANCE.items():
        terminalreporter.write_line(f"ACCEPTANCE {name}: {status}")
