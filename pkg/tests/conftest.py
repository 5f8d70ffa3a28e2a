import numpy as np
import pytest

from spectraforge import VISIBLE_10NM, WavelengthGrid
from spectraforge import synthetic as syn


@pytest.fixture
def grid():
    return VISIBLE_10NM


@pytest.fixture
def small_grid():
    return WavelengthGrid(400.0, 50.0, 3)


@pytest.fixture
def cameras(grid):
    return syn.phone_cameras(grid)


@pytest.fixture
def prior(grid):
    return syn.smooth_prior(grid, 32, seed=11)


@pytest.fixture
def noise():
    return syn.phone_noise()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
