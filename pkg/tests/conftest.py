from __future__ import annotations

import warnings

import pytest
from hypothesis import HealthCheck, settings

from mcfobs.grid import Grid2
from mcfobs.scheme import PinningWarning, TruncationWarning

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def g64() -> Grid2:
    return Grid2.unit_square(64)


@pytest.fixture
def g128() -> Grid2:
    return Grid2.unit_square(128)


@pytest.fixture
def quiet():
    """Silence the resolution and padding guards for deliberately small runs."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PinningWarning)
        warnings.simplefilter("ignore", TruncationWarning)
        yield
