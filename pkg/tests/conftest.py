import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_spd(p, rng, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return Q @ np.diag(np.linspace(1.0, cond, p)) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
