"""Shared fixtures and the acceptance-criteria summary hook."""

from __future__ import annotations

import pytest

_acceptance_reports: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    _acceptance_reports.append((report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_reports:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed in _acceptance_reports:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")


@pytest.fixture
def tmp_jsonl(tmp_path):
    """Factory writing a Trip to a temp JSONL file, returning the path."""

    def write(trip, name="trip.jsonl"):
        path = tmp_path / name
        trip.save_jsonl(str(path))
        return str(path)

    return write
