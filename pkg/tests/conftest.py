import numpy as np
import pytest

from smcforecast.lgssm import LinearGaussianModel
from smcforecast.model import SV
from smcforecast.rng import generator

TRUE_THETA = np.array([-0.2, 0.97, 0.03, -0.6])


@pytest.fixture
def theta():
    return TRUE_THETA.copy()


@pytest.fixture(scope="session")
def sv_data():
    _, y = SV.simulate(TRUE_THETA, 200, generator(123))
    return y


@pytest.fixture(scope="session")
def lgssm():
    return LinearGaussianModel(q=0.5, r=1.0)


@pytest.fixture(scope="session")
def lgssm_data(lgssm):
    _, y = lgssm.simulate(0.8, 50, generator(11))
    return y
