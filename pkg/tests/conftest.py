import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "systolic",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("systolic")


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
