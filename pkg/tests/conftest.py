import numpy as np
import pytest
from hypothesis import settings

from heatctl.fem import Grid, QuadGrid
from heatctl.weights import WeightParams

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return WeightParams()


@pytest.fixture(scope="session")
def quad8(params):
    return QuadGrid(Grid(8, 8, params.T), params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
