import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qredist",
    deadline=None,
    max_examples=30,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qredist")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def phi_plus():
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return v
