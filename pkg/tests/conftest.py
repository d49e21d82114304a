import math

import numpy as np
import pytest

from qndtomo.states import DEFAULT_GRID, Cat, Coherent, Fock, GridSpec, SqueezedVacuum, Vacuum

# states that fit the default [-10, 10] x 1024 grid at every angle
PRESETS = [
    Vacuum(),
    Coherent(2.0),
    Coherent(1.0 + 1.0j),
    SqueezedVacuum(0.3),
    SqueezedVacuum(-0.3),
    Fock(1),
    Fock(2),
    Cat(2.0, 1),
    Cat(1.5, -1),
]


def overlap(a, b):
    return np.sum(np.conj(a.amplitudes) * b.amplitudes) * a.grid.dx


@pytest.fixture
def grid():
    return DEFAULT_GRID


@pytest.fixture
def small_grid():
    return GridSpec(-8.0, 8.0, 512)


def phase_free_diff(a, b):
    """Max pointwise difference after removing the best global phase."""
    ov = np.sum(np.conj(a) * b)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a * ph - b)))


TWO_SQRT2 = 2.0 * math.sqrt(2.0)
