"""Shared test plumbing: per-check PASS/FAIL lines in the final summary."""

import pytest

_lines = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line and assert on it.

    The recorded lines are replayed in a dedicated section at the end of
    the pytest run, so the verdict for every end-to-end check is visible
    in one place even when output capturing is on.
    """

    def report(name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        _lines.append(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _lines:
        terminalreporter.section("acceptance checks")
        for line in _lines:
            terminalreporter.write_line(line)
