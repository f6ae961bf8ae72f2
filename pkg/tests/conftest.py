import math

import numpy as np
import pytest

from hmjb.moments import double_gamma_moments, laplace_moments, normal_moments

DGAMMA_SHAPE = (1 + math.sqrt(13)) / 2


@pytest.fixture
def std_normal():
    return normal_moments(0.0, 1.0)


@pytest.fixture
def laplace1():
    return laplace_moments(1.0)


@pytest.fixture
def dgamma_k3():
    return double_gamma_moments(DGAMMA_SHAPE, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
