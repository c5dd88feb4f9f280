import numpy as np
import pytest
from hypothesis import settings

from nsfmaxwell.lattice import make_grid
from nsfmaxwell.media import Geometry, build_medium

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs longer than a minute")


def random_complex(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def grid2():
    return make_grid(1, 2, 2, 2)


@pytest.fixture(scope="session")
def grid4():
    return make_grid(1, 4, 4, 4)


@pytest.fixture(scope="session")
def chiral2(grid2):
    return build_medium(grid2, Geometry(), "chiral", 13, 1, 0.5)


@pytest.fixture(scope="session")
def chiral4(grid4):
    return build_medium(grid4, Geometry(), "chiral", 13, 1, 0.5)
