import pytest

CRITERIA = []


@pytest.fixture
def record_criterion():
    def record(result):
        CRITERIA.append(result.line())
        return result

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
