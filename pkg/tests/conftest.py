import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("nlfkpp", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("nlfkpp")


@pytest.fixture
def grid1():
    from nlfkpp import Grid

    return Grid(1, 20.0, 512)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
