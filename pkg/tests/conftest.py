"""Shared test plumbing.

The acceptance checks append one summary line each; the terminal-summary
hook prints them after the run so the measured numbers are visible even
when every check passes.
"""

import pytest

_SUMMARY_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _SUMMARY_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _SUMMARY_LINES:
        terminalreporter.section("acceptance checks")
        for line in _SUMMARY_LINES:
            terminalreporter.write_line(line)
