from __future__ import annotations

import numpy as np
import pytest

from njcones.census import census


@pytest.fixture(scope="session")
def census5():
    return census(5)


@pytest.fixture(scope="session")
def census6():
    return census(6)


@pytest.fixture(scope="session")
def type_reps(census6):
    """First census cone of each six-taxa type, in I, II, III order."""
    return tuple(
        census6.cones[next(i for i, t in enumerate(census6.types) if t == want)]
        for want in ("I", "II", "III")
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
