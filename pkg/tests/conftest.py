"""Shared helpers: reproducible random symplectic matrices and paths."""

import numpy as np
import pytest
from scipy.linalg import expm

from symindex import symcore


def random_sp2(rng: np.random.Generator) -> np.ndarray:
    """Exactly symplectic 2x2 matrix through the cylindrical chart."""
    coords = symcore.CylCoords(
        r=float(rng.uniform(0.3, 3.0)),
        theta=float(rng.uniform(0.0, 2.0 * np.pi)),
        z=float(rng.uniform(-1.5, 1.5)),
    )
    return symcore.from_cyl(coords)


def random_sp4(rng: np.random.Generator) -> np.ndarray:
    """Random 4x4 symplectic matrix as exp(J S) with S symmetric."""
    s = rng.uniform(-0.8, 0.8, size=(4, 4))
    s = 0.5 * (s + s.T)
    return expm(symcore.J4 @ s)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
