import numpy as np
import pytest

from glvortex.grid import Domain


@pytest.fixture(scope="session")
def disk32():
    return Domain.unit_disk(32)


@pytest.fixture(scope="session")
def disk64():
    return Domain.unit_disk(64)


@pytest.fixture(scope="session")
def disk128():
    return Domain.unit_disk(128)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
