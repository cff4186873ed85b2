import numpy as np
import pytest

from nlsechan import standard_link

# one line per acceptance criterion, echoed in the terminal summary so the
# PASS/FAIL record survives pytest's output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def link():
    """The reference 1000 km link used across the suite."""
    return standard_link()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
