import pytest

from qutrit_transfer import StateTransferSimulator

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_fit():
    """Default operating point, fitted once per session."""
    return StateTransferSimulator().fit()


@pytest.fixture
def report():
    def emit(name, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
