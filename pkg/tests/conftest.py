import numpy as np
import pytest

from msgwr.local_fit import Dataset
from msgwr.simulation import gen_mixed_effects, gen_pure_geographic


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run slow desk-scale tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale acceptance run, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def make_dataset(rng, n=40, p=2, noise=0.5):
    """
    Random scattered dataset with an intercept and p predictors.
    """
    coords = rng.uniform(0, 10, size=(n, 2))
    predictors = rng.normal(size=(n, p))
    beta = rng.normal(size=p + 1)
    y = beta[0] + predictors @ beta[1:] + noise * rng.normal(size=n)
    return Dataset.from_arrays(coords, y, predictors, [f'x{j}' for j in range(1, p + 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def dataset(rng):
    return make_dataset(rng)


@pytest.fixture(scope='session')
def pure_geo_small():
    return gen_pure_geographic(seed=3, grid_side=8)


@pytest.fixture(scope='session')
def mixed_small():
    return gen_mixed_effects(seed=5, grid_side=8)
