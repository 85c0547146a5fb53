"""Shared test plumbing: per-check PASS/FAIL lines in the final summary."""

import pytest

_lines = []


@pytest.fixture
def acceptance_report():
    def report(name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        _lines.append(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _lines:
        terminalreporter.section("figure generation checks")
        for line in _lines:
            terminalreporter.write_line(line)
