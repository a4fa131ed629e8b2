import numpy as np
import pytest

from ttfun import PolySpace


@pytest.fixture(scope="session")
def space():
    """Default cubic space in base 2."""
    return PolySpace(3, 2)


@pytest.fixture(scope="session")
def space_b3():
    return PolySpace(3, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Echo one pass/fail line per acceptance criterion after the run."""
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
