from __future__ import annotations

import pytest
from hypothesis import settings

from rovibpol.moldata import bundled

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def mixed():
    return bundled("mixed")


@pytest.fixture(scope="session")
def identical():
    return bundled("identical")


@pytest.fixture(scope="session")
def small_mixed():
    """32-state basis: N_max 1, v_max 1, J_max 1, M = 0."""
    return bundled("mixed", N_max=1, J_max=1)
