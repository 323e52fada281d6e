"""Collects the acceptance verdict lines and prints them after the run."""
import pytest

_LINES = []


@pytest.fixture
def report():
    """Record ``(criterion, passed, detail)``; echoed live and in the summary."""
    def add(name, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} {name}: {detail}"
        _LINES.append(line)
        print(line, flush=True)
        return passed
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
