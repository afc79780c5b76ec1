import numpy as np
import pytest

from vrrw import model


@pytest.fixture
def ex2():
    return model.example2()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_valid(rng, d, low=0.0):
    a = rng.uniform(low, 1.0, (d, d))
    return model.validate((a + a.T) / 2)
