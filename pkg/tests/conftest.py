"""Shared pytest plumbing: acceptance lines echoed into the terminal summary."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance check, then enforce it.

    The line is printed immediately (visible with -s, and in the captured
    output of a failing test) and repeated in the terminal summary so a
    plain `pytest -q` run still shows one line per acceptance item.
    """

    def record(num, name, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        line = f"ACCEPTANCE {num} ({name}): {status}"
        if detail:
            line += f" - {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance summary")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line("  " + line)
