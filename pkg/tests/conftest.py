import pytest


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture
def record_criterion(request):
    """Store one summary line per acceptance criterion for the terminal report."""

    def record(number: int, line: str):
        request.config._acceptance_lines[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
