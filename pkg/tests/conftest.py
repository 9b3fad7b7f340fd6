import pytest

LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[LINES] = []


@pytest.fixture
def report_line(request):
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    def add(line: str):
        request.config.stash[LINES].append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
