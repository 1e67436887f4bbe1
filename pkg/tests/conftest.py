import numpy as np
import pytest

from sparsedom.dyadic import GridGeometry


@pytest.fixture
def geom4():
    return GridGeometry(1, 4)


@pytest.fixture
def geom6():
    return GridGeometry(1, 6)


@pytest.fixture
def geom2d():
    return GridGeometry(2, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
