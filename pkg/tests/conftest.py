import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def within_sigma(estimate, target, k=3.0, floor=0.0):
    """True when |estimate.value - target| <= k standard errors (plus floor)."""
    return abs(estimate.value - target) <= k * estimate.std_error + floor
