import pytest

_LINES = {}


@pytest.fixture
def record_criterion():
    """Store a criterion's one-line report for the terminal summary."""

    def record(result):
        _LINES[result.number] = result.line()
        return result

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        terminalreporter.write_line(_LINES[number])
