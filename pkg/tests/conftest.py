import numpy as np
import pytest

from kglab.ground_state import ground_state_cached


@pytest.fixture(scope="session")
def q1():
    return ground_state_cached(1)


@pytest.fixture(scope="session")
def q3():
    return ground_state_cached(3)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
