import pytest
from hypothesis import HealthCheck, settings

from ridecrypt.crypto import watchdog

settings.register_profile(
    "suite",
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def prf_collision_guard():
    """The PRF collision watchdog must stay clean across the entire suite."""
    assert watchdog.enabled
    yield
    assert watchdog.collisions == 0, "PRF collision observed during the test run"
