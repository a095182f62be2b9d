import sys
from pathlib import Path

import pytest

from locdens import ModelParams, make_gaussian, mix

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def massive():
    return ModelParams(1.0, 1)


@pytest.fixture(scope="session")
def rest(massive):
    """m=1, d=1, p0=0, sigma=0.25."""
    return make_gaussian(massive, 0.0, 0.25)


@pytest.fixture(scope="session")
def moving(massive):
    """m=1, d=1, p0=1, sigma=0.25."""
    return make_gaussian(massive, 1.0, 0.25)


@pytest.fixture(scope="session")
def fast(massive):
    """m=1, d=1, p0=2, sigma=0.25: <H> about 2.2 times that of ``rest``."""
    return make_gaussian(massive, 2.0, 0.25)


@pytest.fixture(scope="session")
def unequal_mixture(rest, fast):
    return mix([(0.5, rest), (0.5, fast)])
