import numpy as np
import pytest

from adsql.reference import static_chart
from adsql.sphere import SphereGrid


@pytest.fixture(scope="session")
def grid16():
    return SphereGrid(16)


@pytest.fixture(scope="session")
def grid8():
    return SphereGrid(8)


@pytest.fixture(scope="session")
def ads():
    return static_chart("ads")


@pytest.fixture(scope="session")
def ds():
    return static_chart("ds")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
