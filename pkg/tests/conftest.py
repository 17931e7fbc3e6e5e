import numpy as np
import pytest

from qumond import oracles
from qumond.grid import ScalarGrid
from qumond.singular import default_schedule

N, L = 64, 2.0


@pytest.fixture(scope="session")
def grid64():
    return N, L


@pytest.fixture(scope="session")
def sched64():
    return default_schedule(2.0 * L / N)


@pytest.fixture(scope="session")
def ball64():
    """Uniform ball of radius 1 and density 3/(4 pi), i.e. unit mass."""
    return ScalarGrid.from_function(N, L, lambda x, y, z: np.where(x * x + y * y + z * z < 1.0, 3.0 / (4.0 * np.pi), 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def mixture64():
    return oracles.gaussian_mixture(N, L, np.random.default_rng(7))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
