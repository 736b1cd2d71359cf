"""Closed-form path families with exact index formulas.

These families are the ground truth the numerical engines are validated
against: rotation-type paths generated by definite quadratic Hamiltonians,
their sign-reversed variants, matrix exponentials e^{t J S} for diagonal
definite S, and unipotent shears.  ``analytic_clm`` / ``analytic_cz``
return the exact integer indices; the test-suite requires the crossing-form
and intersection-count engines to reproduce them on a full parameter grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError
from .symcore import SymplecticPath, closed_form_path

LATTICE_RTOL = 1e-9       # membership test for T in (2 pi / beta) Z
LATTICE_WARN_RTOL = 1e-6  # proximity at which the CLI warns about branch flips


class FamilyKind(enum.Enum):
    ROTATION_R = "rbeta"
    ROTATION_S = "sbeta"
    EXP_JS = "expjs"
    SHEAR = "shear"


@dataclass(frozen=True)
class PathFamily:
    """Parameters of one closed-form family on [0, T].

    Rotation families use positive a1, a2 with frequency beta = sqrt(a1 a2)
    (never stored, always derived); shears use f_sign in {+1, -1} for the
    off-diagonal entry f(t) = f_sign * t.  EXP_JS with sign=+1 means
    S = diag(a1, a2) positive definite, sign=-1 negative definite.
    """

    kind: FamilyKind
    T: float
    a1: Optional[float] = None
    a2: Optional[float] = None
    f_sign: Optional[int] = None
    s_sign: int = +1

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.kind is FamilyKind.SHEAR:
            if self.f_sign not in (+1, -1):
                raise ValueError("shear requires f_sign in {+1, -1}")
        else:
            if self.a1 is None or self.a2 is None or self.a1 <= 0 or self.a2 <= 0:
                raise ValueError("rotation families require positive a1, a2")
            if self.kind is FamilyKind.EXP_JS and self.s_sign not in (+1, -1):
                raise ValueError("EXP_JS requires s_sign in {+1, -1}")

    @property
    def beta(self) -> float:
        return math.sqrt(self.a1 * self.a2)

    def near_lattice(self, rtol: float = LATTICE_WARN_RTOL) -> bool:
        """True when T is within rtol (relative) of the crossing lattice."""
        if self.kind is FamilyKind.SHEAR:
            return False
        x = self.T * self.beta / (2.0 * math.pi)
        return abs(x - round(x)) <= rtol * max(1.0, abs(x)) and round(x) > 0


def _rotation_kind(family: PathFamily) -> FamilyKind:
    """Resolve EXP_JS to the R-type (definite positive) or S-type rotation."""
    if family.kind is FamilyKind.EXP_JS:
        return FamilyKind.ROTATION_R if family.s_sign > 0 else FamilyKind.ROTATION_S
    return family.kind


def evaluate(family: PathFamily, t: float) -> np.ndarray:
    """Closed-form matrix of the family at time t in [0, T]."""
    if t < 0 or t > family.T * (1 + 1e-12):
        raise ValueError(f"t = {t} outside [0, {family.T}]")
    return _matrix(family, np.array([t]))[0]


def _matrix(family: PathFamily, ts: np.ndarray) -> np.ndarray:
    out = np.zeros((len(ts), 2, 2))
    kind = _rotation_kind(family)
    if kind is FamilyKind.SHEAR:
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = 1.0
        out[:, 0, 1] = family.f_sign * ts
        return out
    beta = family.beta
    c = np.cos(beta * ts)
    s = np.sin(beta * ts)
    out[:, 0, 0] = c
    out[:, 1, 1] = c
    if kind is FamilyKind.ROTATION_R:
        out[:, 0, 1] = -(beta / family.a1) * s
        out[:, 1, 0] = (beta / family.a2) * s
    else:
        out[:, 0, 1] = (beta / family.a1) * s
        out[:, 1, 0] = -(beta / family.a2) * s
    return out


def _derivative(family: PathFamily, t: float) -> np.ndarray:
    kind = _rotation_kind(family)
    if kind is FamilyKind.SHEAR:
        return np.array([[0.0, float(family.f_sign)], [0.0, 0.0]])
    beta = family.beta
    c = math.cos(beta * t)
    s = math.sin(beta * t)
    if kind is FamilyKind.ROTATION_R:
        return np.array(
            [
                [-beta * s, -(beta**2 / family.a1) * c],
                [(beta**2 / family.a2) * c, -beta * s],
            ]
        )
    return np.array(
        [
            [-beta * s, (beta**2 / family.a1) * c],
            [-(beta**2 / family.a2) * c, -beta * s],
        ]
    )


def family_path(family: PathFamily) -> SymplecticPath:
    """Wrap the family as a differentiable closed-form path."""
    return closed_form_path(
        2,
        family.T,
        lambda t: _matrix(family, np.array([t]))[0],
        derivative=lambda t: _derivative(family, t),
        vector_evaluator=lambda ts: _matrix(family, ts),
    )


def exp_js_path(s_matrix: np.ndarray, duration: float) -> SymplecticPath:
    """The path t -> e^{t J S} for a general definite symmetric 2x2 S.

    With det S > 0 the generator J S has eigenvalues +- i beta,
    beta = sqrt(det S), so the exponential has the closed form
    cos(beta t) I + sin(beta t)/beta * (J S).
    """
    s_matrix = np.asarray(s_matrix, dtype=float)
    if s_matrix.shape != (2, 2):
        raise DimensionError("expected a 2x2 symmetric matrix")
    if abs(s_matrix[0, 1] - s_matrix[1, 0]) > 1e-12:
        raise ValueError("S must be symmetric")
    det = float(np.linalg.det(s_matrix))
    if det <= 0:
        raise ValueError("S must be definite (positive or negative)")
    beta = math.sqrt(det)
    js = np.array([[0.0, -1.0], [1.0, 0.0]]) @ s_matrix

    def scalar(t: float) -> np.ndarray:
        return math.cos(beta * t) * np.eye(2) + (math.sin(beta * t) / beta) * js

    def vector(ts: np.ndarray) -> np.ndarray:
        c = np.cos(beta * ts)[:, None, None]
        s = (np.sin(beta * ts) / beta)[:, None, None]
        return c * np.eye(2) + s * js

    return closed_form_path(
        2,
        duration,
        scalar,
        derivative=lambda t: js @ scalar(t),
        vector_evaluator=vector,
    )


def _lattice_count(T: float, beta: float) -> tuple[int, bool]:
    """floor(T beta / 2 pi) with a tolerance-aware lattice membership flag."""
    x = T * beta / (2.0 * math.pi)
    nearest = round(x)
    if nearest > 0 and abs(x - nearest) <= LATTICE_RTOL * max(1.0, abs(x)):
        return int(nearest), True
    return int(math.floor(x)), False


def analytic_clm(family: PathFamily) -> int:
    """Exact Maslov index of the family's graph path against the diagonal.

    Rotation type (definite positive generator): 2 floor(T beta / 2 pi) on
    the lattice, else 2 (floor + 1).  Sign-reversed rotations give
    -2 floor(T beta / 2 pi) on both branches: the endpoint-form index paid
    on the lattice exactly replaces the interior crossing that leaves the
    interval.  Shears: 0 for slope +1, 1 for slope -1.
    """
    kind = _rotation_kind(family)
    if kind is FamilyKind.SHEAR:
        return 0 if family.f_sign > 0 else 1
    m, on_lattice = _lattice_count(family.T, family.beta)
    if kind is FamilyKind.ROTATION_R:
        return 2 * m if on_lattice else 2 * (m + 1)
    return -2 * m


def analytic_cz(family: PathFamily) -> int:
    """Exact Conley-Zehnder index: the graph Maslov index minus one (n = 1)."""
    return analytic_clm(family) - 1


DEFAULT_PARAM_GRID = {
    "a_values": (0.5, 1.0, 2.0, 3.0),
    "T_values": (math.pi / 2, math.pi, 2 * math.pi, 3 * math.pi, 7.0),
}


def parameter_grid() -> list[PathFamily]:
    """The oracle grid: every (a1, a2, T) combination for the R family."""
    grid = []
    for a1 in DEFAULT_PARAM_GRID["a_values"]:
        for a2 in DEFAULT_PARAM_GRID["a_values"]:
            for T in DEFAULT_PARAM_GRID["T_values"]:
                grid.append(PathFamily(kind=FamilyKind.ROTATION_R, T=T, a1=a1, a2=a2))
    return grid
