import numpy as np
import pytest

from fracepi import TimeGrid, default_scenario, simulate_classical


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def day100_grid():
    return TimeGrid(t_start=0.0, t_end=100.0, step=0.01)


@pytest.fixture(scope="session")
def classical_100d(scenario, day100_grid):
    params, y0 = scenario
    return simulate_classical(params, y0, day100_grid)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
