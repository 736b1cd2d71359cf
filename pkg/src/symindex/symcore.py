"""Fixed-dimension symplectic linear algebra for dims 2 and 4.

Provides the standard symplectic form, group-membership tests, the
determinant indicator ``I(M) = (-1)^(n-1) det(M - I)`` that cuts the group
into its regular components, the interleaved symplectic sum, symplectic
paths (closed-form or sampled) with the operations the index engines need,
and the cylindrical-coordinate chart of the 2x2 group.

All operations are pure functions over immutable data; nothing here keeps
mutable state, so concurrent use needs no coordination.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionError,
    EndpointMismatchError,
    MalformedPathFileError,
    NonIdentityStartError,
    SymplecticityError,
)

TOL_SYMPLECTIC = 1e-10       # closed-form paths
TOL_INTEGRATED = 1e-8        # RK-integrated flows drift, so the gate is looser
TOL_CYL_ROUNDTRIP = 1e-12

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])
J4 = np.array(
    [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)


def standard_form(dim: int) -> np.ndarray:
    """Standard symplectic form matrix J = [[0, -I], [I, 0]] for dim 2 or 4."""
    if dim == 2:
        return J2
    if dim == 4:
        return J4
    raise DimensionError(f"unsupported dimension {dim}; only 2 and 4")


def _check_square(m: np.ndarray) -> int:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    if dim not in (2, 4):
        raise DimensionError(f"unsupported dimension {dim}; only 2 and 4")
    return dim


def symplectic_defect(m: np.ndarray) -> float:
    """Max-norm of M^T J M - J; zero exactly when M is symplectic."""
    m = np.asarray(m, dtype=float)
    j = standard_form(_check_square(m))
    return float(np.max(np.abs(m.T @ j @ m - j)))


def is_symplectic(m: np.ndarray, tol: float = TOL_SYMPLECTIC) -> bool:
    """True iff ||M^T J M - J||_inf <= tol (dim 2 or 4 only)."""
    return symplectic_defect(m) <= tol


@dataclass(frozen=True)
class SymplecticMatrix:
    """A validated element of the symplectic group, dim 2 or 4.

    Construction checks both the defining relation and det = 1; most
    internal code works on raw ndarrays and only wraps at API boundaries.
    """

    entries: np.ndarray
    tol: float = TOL_SYMPLECTIC

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", m)
        defect = symplectic_defect(m)
        if defect > self.tol:
            raise SymplecticityError(
                f"matrix is not symplectic: defect {defect:.3e} > tol {self.tol:.1e}"
            )
        if abs(np.linalg.det(m) - 1.0) > max(self.tol, 1e-9):
            raise SymplecticityError("matrix does not have unit determinant")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def as_matrix(m) -> np.ndarray:
    """Accept a SymplecticMatrix or a raw array; return the ndarray."""
    if isinstance(m, SymplecticMatrix):
        return m.entries
    return np.asarray(m, dtype=float)


# ---------------------------------------------------------------------------
# Determinant indicator and the regular/singular decomposition
# ---------------------------------------------------------------------------


def det_indicator(m) -> float:
    """The indicator I(M) = (-1)^(n-1) det(M - I) for M in Sp(2n), n = 1, 2.

    Its zero set is the singular hypersurface (matrices with eigenvalue 1);
    the two sign regions are the path-connected components of the rest:
    I < 0 on the plus component, I > 0 on the minus component.
    """
    m = as_matrix(m)
    dim = _check_square(m)
    n = dim // 2
    return float((-1.0) ** (n - 1) * np.linalg.det(m - np.eye(dim)))


class Region(enum.Enum):
    SP_PLUS = "Sp+"
    SP_MINUS = "Sp-"
    SP_ZERO = "Sp0"


def classify_region(m, tol: float = 1e-10) -> Region:
    """Classify M as Sp+, Sp- or Sp0 by the sign of the indicator I(M)."""
    ind = det_indicator(m)
    if abs(ind) <= tol:
        return Region.SP_ZERO
    return Region.SP_PLUS if ind < 0 else Region.SP_MINUS


def adjugate(a: np.ndarray) -> np.ndarray:
    """Adjugate (transposed cofactor matrix) of a 2x2 or 4x4 matrix.

    Computed from explicit 1x1 / 3x3 minors so it stays exact at singular
    arguments, where det(A) A^{-1} is unusable.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 2:
        return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])
    cof = np.empty((n, n))
    idx = np.arange(n)
    for i in range(n):
        rows = idx[idx != i]
        for j in range(n):
            cols = idx[idx != j]
            minor = a[np.ix_(rows, cols)]
            cof[i, j] = (-1.0) ** (i + j) * np.linalg.det(minor)
    return cof.T


def orientation_derivative(m) -> float:
    """Derivative d/ds I(M e^{sJ}) at s = 0.

    This is the transverse orientation datum of the singular hypersurface at
    M: a path crossing with d I/dt of the same sign crosses in the positive
    direction.  Vanishes when dim ker(M - I) >= 2.
    """
    m = as_matrix(m)
    dim = _check_square(m)
    n = dim // 2
    j = standard_form(dim)
    return float((-1.0) ** (n - 1) * np.trace(adjugate(m - np.eye(dim)) @ m @ j))


def orientation_sign(m, tol: float = 0.0) -> int:
    """Sign of the transverse-orientation derivative at M (0 if degenerate)."""
    d = orientation_derivative(m)
    if abs(d) <= tol:
        return 0
    return 1 if d > 0 else -1


# ---------------------------------------------------------------------------
# Symplectic sum (interleaved embedding Sp(2) x Sp(2) -> Sp(4))
# ---------------------------------------------------------------------------


def symplectic_sum(m1, m2) -> np.ndarray:
    """Interleaved block sum of two 2x2 symplectic matrices.

    Rows are (a1,0,b1,0), (0,a2,0,b2), (c1,0,d1,0), (0,c2,0,d2): coordinates
    (x1, x2, y1, y2) where (x1, y1) transforms under m1 and (x2, y2) under
    m2.  Spectra unite and det(M1 (+) M2 - I) factors accordingly.
    """
    m1 = as_matrix(m1)
    m2 = as_matrix(m2)
    if m1.shape != (2, 2) or m2.shape != (2, 2):
        raise DimensionError("symplectic_sum expects two 2x2 matrices")
    out = np.zeros((4, 4))
    out[0, 0], out[0, 2] = m1[0, 0], m1[0, 1]
    out[2, 0], out[2, 2] = m1[1, 0], m1[1, 1]
    out[1, 1], out[1, 3] = m2[0, 0], m2[0, 1]
    out[3, 1], out[3, 3] = m2[1, 0], m2[1, 1]
    return out


def split_sum(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of symplectic_sum for matrices that are exact interleaved sums."""
    m = as_matrix(m)
    m1 = np.array([[m[0, 0], m[0, 2]], [m[2, 0], m[2, 2]]])
    m2 = np.array([[m[1, 1], m[1, 3]], [m[3, 1], m[3, 3]]])
    return m1, m2


def rotation2(theta: float) -> np.ndarray:
    """e^{theta J} in dim 2: rotation by theta."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def expm_j(dim: int, theta: float) -> np.ndarray:
    """Exact e^{theta J} for dim 2 or 4 (J squares to -I, so it is a rotation)."""
    if dim == 2:
        return rotation2(theta)
    if dim == 4:
        r = rotation2(theta)
        return symplectic_sum(r, r)
    raise DimensionError(f"unsupported dimension {dim}")


# ---------------------------------------------------------------------------
# Symplectic paths
# ---------------------------------------------------------------------------

CLOSED_FORM = "closed_form"
SAMPLED = "sampled"


@dataclass(frozen=True)
class SymplecticPath:
    """A continuous path [0, T] -> Sp(dim).

    Closed-form paths carry an analytic evaluator (and optionally its time
    derivative and a vectorized evaluator); sampled paths hold a strictly
    increasing time grid with one matrix per node and evaluate between nodes
    by entrywise linear interpolation, with no re-symplectification.  Root
    isolation in the index engines always bisects on this evaluator.
    """

    dim: int
    duration: float
    kind: str
    _scalar: Callable[[float], np.ndarray]
    _vector: Optional[Callable[[np.ndarray], np.ndarray]] = None
    _derivative: Optional[Callable[[float], np.ndarray]] = None
    times: Optional[np.ndarray] = None
    matrices: Optional[np.ndarray] = None
    symp_tol: float = TOL_SYMPLECTIC

    def at(self, t: float) -> np.ndarray:
        if t < -1e-9 * max(self.duration, 1.0) or t > self.duration * (1 + 1e-9) + 1e-12:
            raise ValueError(f"t = {t} outside path domain [0, {self.duration}]")
        return self._scalar(float(np.clip(t, 0.0, self.duration)))

    def at_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, self.duration)
        if self._vector is not None:
            return self._vector(ts)
        return np.stack([self._scalar(float(t)) for t in ts])

    def velocity(self, t: float) -> np.ndarray:
        """d/dt psi(t); analytic if available, else a central difference.

        At the endpoints the difference is one-sided (order 2).
        """
        if self._derivative is not None:
            return self._derivative(float(t))
        h = self._fd_step()
        t = float(t)
        if t - h < 0.0:
            return (-3 * self.at(t) + 4 * self.at(t + h) - self.at(t + 2 * h)) / (2 * h)
        if t + h > self.duration:
            return (3 * self.at(t) - 4 * self.at(t - h) + self.at(t - 2 * h)) / (2 * h)
        return (self.at(t + h) - self.at(t - h)) / (2 * h)

    def _fd_step(self) -> float:
        if self.kind == SAMPLED and self.times is not None and len(self.times) > 1:
            return float(np.min(np.diff(self.times)))
        return self.duration * 1e-7

    @property
    def starts_at_identity(self) -> bool:
        return bool(np.max(np.abs(self.at(0.0) - np.eye(self.dim))) <= max(self.symp_tol, 1e-8))

    def require_identity_start(self) -> None:
        if not self.starts_at_identity:
            raise NonIdentityStartError("path does not start at the identity")

    def end(self) -> np.ndarray:
        return self.at(self.duration)


def closed_form_path(
    dim: int,
    duration: float,
    evaluator: Callable[[float], np.ndarray],
    derivative: Optional[Callable[[float], np.ndarray]] = None,
    vector_evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SymplecticPath:
    if dim not in (2, 4):
        raise DimensionError(f"unsupported dimension {dim}")
    if duration <= 0:
        raise ValueError("path duration must be positive")
    return SymplecticPath(
        dim=dim,
        duration=float(duration),
        kind=CLOSED_FORM,
        _scalar=evaluator,
        _vector=vector_evaluator,
        _derivative=derivative,
    )


def sampled_path(times: np.ndarray, matrices: np.ndarray, symp_tol: float = TOL_INTEGRATED) -> SymplecticPath:
    """Path from a dense grid of matrices, linearly interpolated in between."""
    times = np.asarray(times, dtype=float)
    matrices = np.asarray(matrices, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise MalformedPathFileError("need at least two samples")
    if matrices.shape[0] != len(times):
        raise MalformedPathFileError("times and matrices disagree in length")
    if abs(times[0]) > 1e-12 * max(1.0, abs(times[-1])):
        raise MalformedPathFileError("time grid must start at 0")
    if np.any(np.diff(times) <= 0):
        raise MalformedPathFileError("time grid must be strictly increasing")
    dim = matrices.shape[1]
    if dim not in (2, 4) or matrices.shape[2] != dim:
        raise DimensionError(f"unsupported matrix shape {matrices.shape[1:]}")

    def scalar(t: float) -> np.ndarray:
        i = int(np.searchsorted(times, t, side="right")) - 1
        i = min(max(i, 0), len(times) - 2)
        t0, t1 = times[i], times[i + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * matrices[i] + w * matrices[i + 1]

    def vector(ts: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, len(times) - 2)
        t0 = times[idx]
        t1 = times[idx + 1]
        w = ((ts - t0) / (t1 - t0))[:, None, None]
        return (1.0 - w) * matrices[idx] + w * matrices[idx + 1]

    return SymplecticPath(
        dim=dim,
        duration=float(times[-1]),
        kind=SAMPLED,
        _scalar=scalar,
        _vector=vector,
        times=times,
        matrices=matrices,
        symp_tol=symp_tol,
    )


def constant_path(m: np.ndarray, duration: float) -> SymplecticPath:
    m = as_matrix(m)
    dim = _check_square(m)
    return closed_form_path(
        dim,
        duration,
        lambda t: m,
        derivative=lambda t: np.zeros((dim, dim)),
        vector_evaluator=lambda ts: np.broadcast_to(m, (len(ts), dim, dim)).copy(),
    )


def path_concat(p1: SymplecticPath, p2: SymplecticPath, tol: float = TOL_SYMPLECTIC) -> SymplecticPath:
    """Concatenation; requires p1(T1) = p2(0) within tol."""
    if p1.dim != p2.dim:
        raise DimensionError("cannot concatenate paths of different dimension")
    gap = float(np.max(np.abs(p1.end() - p2.at(0.0))))
    if gap > max(tol, 1e-8):
        raise EndpointMismatchError(f"endpoint mismatch {gap:.3e} exceeds tolerance")
    t_split = p1.duration

    def scalar(t: float) -> np.ndarray:
        if t <= t_split:
            return p1.at(t)
        return p2.at(t - t_split)

    def vector(ts: np.ndarray) -> np.ndarray:
        left = ts <= t_split
        out = np.empty((len(ts), p1.dim, p1.dim))
        if np.any(left):
            out[left] = p1.at_many(ts[left])
        if np.any(~left):
            out[~left] = p2.at_many(ts[~left] - t_split)
        return out

    return SymplecticPath(
        dim=p1.dim,
        duration=p1.duration + p2.duration,
        kind=CLOSED_FORM if (p1.kind == CLOSED_FORM and p2.kind == CLOSED_FORM) else SAMPLED,
        _scalar=scalar,
        _vector=vector,
        symp_tol=max(p1.symp_tol, p2.symp_tol),
    )


def path_iterate(p: SymplecticPath, m: int) -> SymplecticPath:
    """m-th iteration: psi^m(t) = psi(t - jT) (psi(T))^j on [jT, (j+1)T]."""
    if m < 1 or int(m) != m:
        raise ValueError("iteration count must be a positive integer")
    p.require_identity_start()
    m = int(m)
    period = p.duration
    monodromy = p.end()
    powers = [np.eye(p.dim)]
    for _ in range(m):
        powers.append(monodromy @ powers[-1])

    def scalar(t: float) -> np.ndarray:
        j = min(int(t // period), m - 1)
        return p.at(t - j * period) @ powers[j]

    def vector(ts: np.ndarray) -> np.ndarray:
        js = np.minimum((ts // period).astype(int), m - 1)
        out = np.empty((len(ts), p.dim, p.dim))
        for j in range(m):
            sel = js == j
            if np.any(sel):
                out[sel] = p.at_many(ts[sel] - j * period) @ powers[j]
        return out

    deriv = None
    if p._derivative is not None:
        def deriv(t: float) -> np.ndarray:
            j = min(int(t // period), m - 1)
            return p.velocity(t - j * period) @ powers[j]

    return SymplecticPath(
        dim=p.dim,
        duration=m * period,
        kind=p.kind,
        _scalar=scalar,
        _vector=vector,
        _derivative=deriv,
        symp_tol=p.symp_tol,
    )


def path_perturb(p: SymplecticPath, eps: float) -> SymplecticPath:
    """Pointwise left-multiplication by the exact rotation e^{-eps J}."""
    rot = expm_j(p.dim, -eps)

    deriv = None
    if p._derivative is not None:
        deriv = lambda t: rot @ p.velocity(t)

    return SymplecticPath(
        dim=p.dim,
        duration=p.duration,
        kind=p.kind,
        _scalar=lambda t: rot @ p.at(t),
        _vector=lambda ts: rot @ p.at_many(ts),
        _derivative=deriv,
        times=p.times,
        matrices=None if p.matrices is None else rot @ p.matrices,
        symp_tol=p.symp_tol,
    )


def path_sum(p1: SymplecticPath, p2: SymplecticPath) -> SymplecticPath:
    """Pointwise interleaved sum of two dim-2 paths over a common domain."""
    if p1.dim != 2 or p2.dim != 2:
        raise DimensionError("path_sum expects two dim-2 paths")
    if abs(p1.duration - p2.duration) > 1e-12 * max(p1.duration, p2.duration):
        raise ValueError("path_sum requires equal durations")

    def vector(ts: np.ndarray) -> np.ndarray:
        a = p1.at_many(ts)
        b = p2.at_many(ts)
        out = np.zeros((len(ts), 4, 4))
        out[:, 0, 0], out[:, 0, 2] = a[:, 0, 0], a[:, 0, 1]
        out[:, 2, 0], out[:, 2, 2] = a[:, 1, 0], a[:, 1, 1]
        out[:, 1, 1], out[:, 1, 3] = b[:, 0, 0], b[:, 0, 1]
        out[:, 3, 1], out[:, 3, 3] = b[:, 1, 0], b[:, 1, 1]
        return out

    deriv = None
    if p1._derivative is not None and p2._derivative is not None:
        def deriv(t: float) -> np.ndarray:
            d = np.zeros((4, 4))
            da, db = p1.velocity(t), p2.velocity(t)
            d[0, 0], d[0, 2], d[2, 0], d[2, 2] = da[0, 0], da[0, 1], da[1, 0], da[1, 1]
            d[1, 1], d[1, 3], d[3, 1], d[3, 3] = db[0, 0], db[0, 1], db[1, 0], db[1, 1]
            return d

    return SymplecticPath(
        dim=4,
        duration=p1.duration,
        kind=CLOSED_FORM if (p1.kind == CLOSED_FORM and p2.kind == CLOSED_FORM) else SAMPLED,
        _scalar=lambda t: symplectic_sum(p1.at(t), p2.at(t)),
        _vector=vector,
        _derivative=deriv,
        symp_tol=max(p1.symp_tol, p2.symp_tol),
    )


def path_rescale(p: SymplecticPath, k: float) -> SymplecticPath:
    """Affine time rescaling: the path t -> psi(k t) on [0, T/k]."""
    if k <= 0:
        raise ValueError("rescaling factor must be positive")
    deriv = None
    if p._derivative is not None:
        deriv = lambda t: k * p.velocity(k * t)
    return SymplecticPath(
        dim=p.dim,
        duration=p.duration / k,
        kind=p.kind,
        _scalar=lambda t: p.at(k * t),
        _vector=lambda ts: p.at_many(k * ts),
        _derivative=deriv,
        symp_tol=p.symp_tol,
    )


def diag_path_value(alpha: float, dim: int) -> np.ndarray:
    """diag(alpha, alpha^{-1}) or its interleaved double, per dimension."""
    d = np.array([[alpha, 0.0], [0.0, 1.0 / alpha]])
    return d if dim == 2 else symplectic_sum(d, d)


def reference_retraction(duration: float, dim: int = 4) -> SymplecticPath:
    """Reference path from a fixed hyperbolic matrix to the identity.

    t -> diag(2 - t/T, (2 - t/T)^{-1}) (interleave-doubled in dim 4).  It
    stays inside the plus region until the final instant, where it reaches
    the identity; the index engines concatenate it in front of a path that
    starts at the identity to normalize the intersection count.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if dim not in (2, 4):
        raise DimensionError(f"unsupported dimension {dim}")

    def alpha(t):
        return 2.0 - t / duration

    def vector(ts: np.ndarray) -> np.ndarray:
        a = alpha(ts)
        out = np.zeros((len(ts), dim, dim))
        if dim == 2:
            out[:, 0, 0] = a
            out[:, 1, 1] = 1.0 / a
        else:
            out[:, 0, 0] = a
            out[:, 1, 1] = a
            out[:, 2, 2] = 1.0 / a
            out[:, 3, 3] = 1.0 / a
        return out

    def deriv(t: float) -> np.ndarray:
        a = alpha(t)
        da = -1.0 / duration
        d = np.zeros((dim, dim))
        if dim == 2:
            d[0, 0] = da
            d[1, 1] = -da / a**2
        else:
            d[0, 0] = d[1, 1] = da
            d[2, 2] = d[3, 3] = -da / a**2
        return d

    return closed_form_path(
        dim,
        duration,
        lambda t: diag_path_value(alpha(t), dim),
        derivative=deriv,
        vector_evaluator=vector,
    )


def xi2_path(duration: float) -> SymplecticPath:
    """The dim-4 reference retraction (interleaved double of diag(2-t/T, ...))."""
    return reference_retraction(duration, dim=4)


# ---------------------------------------------------------------------------
# Cylindrical coordinates on Sp(2)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylCoords:
    """Cylindrical chart (r, theta, z) of Sp(2): M = P(r, z) O(theta)."""

    r: float
    theta: float
    z: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("r must be positive")


def to_cyl(m) -> CylCoords:
    """Polar-decompose a 2x2 symplectic matrix into chart coordinates.

    P = (M M^T)^{1/2} is computed by the closed 2x2 square-root formula
    P = (A + I) / sqrt(tr A + 2) (valid since det A = 1), avoiding a general
    eigendecomposition in a hot path.
    """
    m = as_matrix(m)
    if m.shape != (2, 2):
        raise DimensionError("to_cyl expects a 2x2 matrix")
    a = m @ m.T
    p = (a + np.eye(2)) / np.sqrt(a[0, 0] + a[1, 1] + 2.0)
    o = np.linalg.solve(p, m)
    theta = float(np.arctan2(o[1, 0], o[0, 0])) % (2.0 * np.pi)
    return CylCoords(r=float(p[0, 0]), theta=theta, z=float(p[0, 1]))


def from_cyl(c: CylCoords) -> np.ndarray:
    """Rebuild the matrix [[r, z], [z, (1+z^2)/r]] @ rotation(theta)."""
    p = np.array([[c.r, c.z], [c.z, (1.0 + c.z**2) / c.r]])
    return p @ rotation2(c.theta)


def det_indicator_cyl(c: CylCoords) -> float:
    """Indicator in chart coordinates: 2 - (r + (1+z^2)/r) cos theta."""
    return 2.0 - (c.r + (1.0 + c.z**2) / c.r) * np.cos(c.theta)


def eig_sp2(m) -> tuple[complex, complex]:
    """Eigenvalues of a 2x2 symplectic matrix from its chart coordinates.

    lambda_pm = (1/2r) [ (1+r^2+z^2) cos theta +- sqrt((...)^2 cos^2 - 4 r^2) ];
    the product is always 1.
    """
    c = to_cyl(m)
    s = 1.0 + c.r**2 + c.z**2
    disc = complex(s**2 * np.cos(c.theta) ** 2 - 4.0 * c.r**2)
    root = np.sqrt(disc)
    lam_p = (s * np.cos(c.theta) + root) / (2.0 * c.r)
    lam_m = (s * np.cos(c.theta) - root) / (2.0 * c.r)
    return complex(lam_p), complex(lam_m)


# ---------------------------------------------------------------------------
# Sampled-path file format
# ---------------------------------------------------------------------------

_CSV_HEADERS = {
    2: "t," + ",".join(f"m{i}{j}" for i in range(1, 3) for j in range(1, 3)),
    4: "t," + ",".join(f"m{i}{j}" for i in range(1, 5) for j in range(1, 5)),
}


def save_path_csv(path: SymplecticPath, stream) -> None:
    """Write a sampled path as CSV: header t,m11,m12,... with row-major entries."""
    if path.times is None or path.matrices is None:
        raise ValueError("only sampled paths can be saved")
    stream.write(_CSV_HEADERS[path.dim] + "\n")
    for t, mat in zip(path.times, path.matrices):
        stream.write(",".join([repr(float(t))] + [repr(float(x)) for x in mat.ravel()]) + "\n")


def load_path_csv(stream, require_identity_start: bool = False) -> SymplecticPath:
    """Parse the CSV sampled-path format.

    Rejects files whose first row is not the identity when
    ``require_identity_start`` is set, and rejects entry counts other than
    4 (dim 2) or 16 (dim 4).
    """
    lines = [ln.strip() for ln in stream if ln.strip()]
    if not lines:
        raise MalformedPathFileError("empty path file")
    header = lines[0].split(",")
    ncols = len(header)
    if header[0] != "t" or ncols < 2 or not all(h.startswith("m") for h in header[1:]):
        raise MalformedPathFileError("header must be t,m11,m12,... with row-major entries")
    side = math.isqrt(ncols - 1)
    if side * side != ncols - 1:
        raise MalformedPathFileError(f"{ncols - 1} entries per row do not form a square matrix")
    if side not in (2, 4):
        raise DimensionError(f"paths of dimension {side} are not supported (only 2 and 4)")
    dim = side
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != ncols:
            raise MalformedPathFileError(f"row has {len(parts)} fields, expected {ncols}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise MalformedPathFileError(f"non-numeric field in row: {ln!r}") from exc
    if len(rows) < 2:
        raise MalformedPathFileError("need at least two samples")
    data = np.asarray(rows)
    times = data[:, 0]
    mats = data[:, 1:].reshape(-1, dim, dim)
    path = sampled_path(times, mats)
    if require_identity_start and not path.starts_at_identity:
        raise NonIdentityStartError("first row of the path file is not the identity")
    return path


def check_path_symplectic(path: SymplecticPath, tol: Optional[float] = None, samples: int = 64) -> float:
    """Max symplectic defect over a sample of the path; raises if above tol."""
    tol = tol if tol is not None else (TOL_SYMPLECTIC if path.kind == CLOSED_FORM else TOL_INTEGRATED)
    ts = np.linspace(0.0, path.duration, samples)
    mats = path.at_many(ts)
    j = standard_form(path.dim)
    defect = float(np.max(np.abs(np.transpose(mats, (0, 2, 1)) @ j @ mats - j)))
    if defect > tol:
        raise SymplecticityError(f"path defect {defect:.3e} exceeds tolerance {tol:.1e}")
    return defect
