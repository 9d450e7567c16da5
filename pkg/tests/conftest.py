import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sbepath.paths import BrownianMotion, GaussianSpec, gen_gaussian

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def bm_path():
    return gen_gaussian(GaussianSpec(BrownianMotion()), 2 ** 10 + 1, (0.0, 1.0), seed=7)


@pytest.fixture(scope="session")
def bm_path_2d():
    return gen_gaussian(GaussianSpec(BrownianMotion(), dim=2), 2 ** 9 + 1, (0.0, 1.0), seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
