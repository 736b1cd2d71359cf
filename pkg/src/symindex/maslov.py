"""Crossing detection, crossing forms, and the index computations.

Two independent engines live here:

* ``clm_index`` computes the Maslov-type index of the Lagrangian-graph path
  of a dim-2 symplectic path relative to the diagonal, via crossing forms
  (coindex at 0, signed signatures inside, minus index at T).  Degenerate
  situations fall back to a small rotation perturbation of the path, with
  the value certified by halving the perturbation.

* ``cz_index_intersection`` counts signed transversal intersections of a
  normalized, perturbed path with the singular hypersurface {det(M-I)=0},
  which realizes the Conley-Zehnder index of a path starting at the
  identity.  The two engines are tied together by the offset relation
  cz + n = clm (graph vs diagonal), which the test-suite enforces on every
  family.

The perturbation used by the intersection counter is e^{-eps J W} with a
fixed positive-diagonal weight matrix W.  Any such generator moves crossing
eigenvalues the same way as e^{-eps J} for small eps (same value in the
limit), but unequal weights split the structurally synchronized crossings
of interleaved sums and of equal-frequency rotations into simple transversal
ones, which a sign-change scan can resolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateCrossingError,
    DimensionError,
    EpsilonTooLargeError,
    NonTransverseCrossingError,
)
from . import symcore
from .symcore import SymplecticPath, standard_form

# Default perturbation sizes.  Integrated (sampled) paths carry ~1e-9 matrix
# error, so their perturbation must sit far above it for determinant signs
# near the junction to be trustworthy.
EPS_CLOSED_FORM = 1e-3
EPS_SAMPLED = 1e-2

# Diagonal weights of the perturbation generator J W, ordered to make every
# plane rotate at its own speed and each plane anisotropic:
# dim 2 -> diag(1, 9); dim 4 -> diag(1, 2, 9, 18) in interleaved coordinates.
_WEIGHTS = {2: (1.0, 9.0), 4: (1.0, 2.0, 9.0, 18.0)}

KERNEL_SV_RTOL = 1e-8     # singular values below this times sigma_max count as zero
D_TOL = 1e-8              # |d(t*)| floor for the graph crossing-form formula
DEFAULT_SCAN_NODES = 4096
BISECT_RTOL = 1e-12


# ---------------------------------------------------------------------------
# Lagrangian frames
# ---------------------------------------------------------------------------


def _big_form(ambient_dim: int) -> np.ndarray:
    """Block form diag(-J, J) on R^n x R^n making graphs Lagrangian."""
    half = ambient_dim // 2
    j = standard_form(half)
    out = np.zeros((ambient_dim, ambient_dim))
    out[:half, :half] = -j
    out[half:, half:] = j
    return out


@dataclass(frozen=True)
class LagrangianFrame:
    """Basis of a Lagrangian subspace of (R^2n x R^2n, omega_bi).

    ``basis`` has shape (ambient_dim, ambient_dim/2) with full column rank;
    construction checks isotropy and independence.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        object.__setattr__(self, "basis", b)
        amb, k = b.shape
        if amb not in (4, 8) or k != amb // 2:
            raise DimensionError(f"bad frame shape {b.shape}")
        form = _big_form(amb)
        cols = b / np.linalg.norm(b, axis=0)
        iso = np.max(np.abs(cols.T @ form @ cols))
        if iso > 1e-10:
            raise ValueError(f"columns are not omega-isotropic (defect {iso:.2e})")
        if np.linalg.svd(cols, compute_uv=False)[-1] <= 1e-10:
            raise ValueError("frame columns are not linearly independent")

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]


def graph_of(m) -> LagrangianFrame:
    """Frame of the graph {(x, Mx)} of a symplectic matrix."""
    m = symcore.as_matrix(m)
    dim = m.shape[0]
    return LagrangianFrame(np.vstack([np.eye(dim), m]))


def diagonal_frame(ambient_dim: int) -> LagrangianFrame:
    half = ambient_dim // 2
    return graph_of(np.eye(half))


def intersection_dim(l1: LagrangianFrame, l2: LagrangianFrame, tol: float = 1e-10) -> int:
    """dim(L1 cap L2) as the rank deficiency of the stacked basis matrix."""
    if l1.ambient_dim != l2.ambient_dim:
        raise DimensionError("frames live in different ambient spaces")
    stacked = np.hstack([l1.basis, l2.basis])
    svals = np.linalg.svd(stacked, compute_uv=False)
    return int(np.sum(svals <= tol * svals[0]))


# ---------------------------------------------------------------------------
# Crossings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Crossing:
    """One crossing of the graph path with the diagonal.

    ``form_matrix`` is the crossing form restricted to ker(psi(t*) - I),
    expressed in the kernel basis; index + coindex + nullity equals the
    kernel dimension, and the crossing is regular exactly when the nullity
    vanishes.
    """

    instant: float
    kernel_dim: int
    form_matrix: np.ndarray
    index: int
    coindex: int
    nullity: int

    @property
    def regular(self) -> bool:
        return self.nullity == 0

    @property
    def signature(self) -> int:
        return self.coindex - self.index

    def to_dict(self) -> dict:
        return {
            "t": self.instant,
            "kernel_dim": self.kernel_dim,
            "index": self.index,
            "coindex": self.coindex,
            "nullity": self.nullity,
        }


@dataclass(frozen=True)
class CrossingScan:
    """Result of scanning det(psi(t) - I) for zeros."""

    instants: tuple[float, ...]
    tangent_suspects: tuple[float, ...]
    degenerate_everywhere: bool


def _det_minus_id(path: SymplecticPath, ts: np.ndarray) -> np.ndarray:
    mats = path.at_many(np.atleast_1d(ts))
    return np.linalg.det(mats - np.eye(path.dim))


def _bisect_zero(f: Callable[[float], float], a: float, b: float, fa: float, fb: float, rtol: float) -> float:
    """Plain bisection on a sign change; terminates on bracket width only."""
    width_goal = rtol * max(abs(b), 1.0)
    while b - a > width_goal:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return 0.5 * (a + b)


def _refine_minimum(f: Callable[[float], float], a: float, b: float, iters: int = 80) -> tuple[float, float]:
    """Golden-section search for the minimum of |f| on [a, b]."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = abs(f(x1)), abs(f(x2))
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = abs(f(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = abs(f(x2))
        if b - a < 1e-14 * max(abs(b), 1.0):
            break
    x = 0.5 * (a + b)
    return x, abs(f(x))


def find_crossings(
    path: SymplecticPath,
    tol: float = 1e-9,
    nodes: int = 2048,
) -> CrossingScan:
    """Locate all zeros of t -> det(psi(t) - I) on [0, T].

    Sign changes are bisected to a 1e-12 relative bracket.  Interior local
    minima of |det| that dip below ``tol`` without a sign change are
    reported as tangent suspects rather than dropped: they are genuine
    crossings of even local order (e.g. full-rotation instants).  If the
    determinant is below tolerance at essentially every node the path lies
    inside the singular set and the scan reports that instead.
    """
    T = path.duration
    ts = np.linspace(0.0, T, nodes + 1)
    vals = _det_minus_id(path, ts)
    scale = float(np.max(np.abs(vals)))

    if scale < tol:
        return CrossingScan(instants=(), tangent_suspects=(), degenerate_everywhere=True)

    f = lambda t: float(_det_minus_id(path, np.array([t]))[0])
    found: list[float] = []
    suspects: list[float] = []

    def push(t):
        for existing in found:
            if abs(existing - t) <= 1e-10 * max(T, 1.0):
                return
        found.append(t)

    # Endpoints by magnitude.
    if abs(vals[0]) < tol:
        push(0.0)
    if abs(vals[-1]) < tol:
        push(T)

    for i in range(nodes):
        a, b = ts[i], ts[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0 and a > 0.0:
            push(a)
            continue
        if (fa < 0) != (fb < 0) and fa != 0.0 and fb != 0.0:
            push(_bisect_zero(f, a, b, fa, fb, BISECT_RTOL))
        elif 0 < i < nodes and abs(fa) <= abs(vals[i - 1]) and abs(fa) <= abs(fb):
            # A tangent crossing shows as a deep interior dip of |det|; skip
            # dips that are shallow relative to the path scale or flat
            # against their surroundings (interpolation rounding noise).
            contrast = max(abs(vals[i - 1]), abs(fb)) - abs(fa)
            if abs(fa) < 1e-3 * scale and contrast > 1e-9 * scale:
                t_min, v_min = _refine_minimum(f, ts[max(i - 1, 0)], b)
                if v_min < tol:
                    if min(abs(t_min), abs(T - t_min)) < 1e-12 * T:
                        push(0.0 if t_min < T / 2 else T)
                    else:
                        push(t_min)
                        suspects.append(t_min)

    # Assign near-boundary roots to the endpoints (tie-break rule).
    cleaned = []
    for t in found:
        if abs(t) < 1e-12 * T:
            t = 0.0
        elif abs(t - T) < 1e-12 * T:
            t = T
        cleaned.append(t)
    cleaned = sorted(set(cleaned))
    return CrossingScan(
        instants=tuple(cleaned),
        tangent_suspects=tuple(sorted(suspects)),
        degenerate_everywhere=False,
    )


def crossing_form_graph(path: SymplecticPath, t_star: float, d_tol: float = D_TOL) -> Crossing:
    """Crossing form of the graph path of a dim-2 path at instant t*.

    Writing psi = [[a, b], [c, d]], the form on a kernel vector (x0, y0) of
    psi(t*) - I is

        Gamma(v) = -x0 eta' - y0 xi',
        xi'  = a' x0 + b' y0 - (b/d) (c' x0 + d' y0),
        eta' = -(c' x0 + d' y0) / d,

    which requires d(t*) away from zero; otherwise the caller must fall back
    to the perturbed path.
    """
    if path.dim != 2:
        raise DimensionError("graph crossing forms are implemented for dim 2 only")
    m = path.at(t_star)
    dm = path.velocity(t_star)
    a, b = m[0, 0], m[0, 1]
    c, d = m[1, 0], m[1, 1]
    da, db = dm[0, 0], dm[0, 1]
    dc, dd = dm[1, 0], dm[1, 1]
    if abs(d) <= d_tol:
        raise DegenerateCrossingError(f"|d(t*)| = {abs(d):.2e} too small for the graph formula")

    # Quadratic form coefficients in (x0, y0): Gamma = A x0^2 + C x0 y0 + B y0^2
    coef_a = dc / d
    coef_b = -db + b * dd / d
    coef_c = dd / d - da + b * dc / d
    gamma = np.array([[coef_a, coef_c / 2.0], [coef_c / 2.0, coef_b]])

    # Restrict to ker(psi(t*) - I).
    u, s, vt = np.linalg.svd(m - np.eye(2))
    kernel_dim = int(np.sum(s <= KERNEL_SV_RTOL * max(s[0], 1.0)))
    if kernel_dim == 0:
        raise ValueError(f"t = {t_star} is not a crossing instant")
    basis = vt[2 - kernel_dim :].T  # (2, kernel_dim), orthonormal
    form = basis.T @ gamma @ basis
    form = 0.5 * (form + form.T)
    eigs = np.linalg.eigvalsh(form)
    scale = max(float(np.max(np.abs(eigs))), 1.0)
    nullity = int(np.sum(np.abs(eigs) <= 1e-10 * scale))
    index = int(np.sum(eigs < -1e-10 * scale))
    coindex = int(np.sum(eigs > 1e-10 * scale))
    return Crossing(
        instant=float(t_star),
        kernel_dim=kernel_dim,
        form_matrix=form,
        index=index,
        coindex=coindex,
        nullity=nullity,
    )


# ---------------------------------------------------------------------------
# Index results
# ---------------------------------------------------------------------------

CROSSING_FORMS = "CROSSING_FORMS"
INTERSECTION_COUNT = "INTERSECTION_COUNT"


@dataclass(frozen=True)
class IndexResult:
    value: int
    method: str
    epsilon_used: float
    crossings: tuple[Crossing, ...] = ()
    certified: bool = True

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "epsilon_used": self.epsilon_used,
            "certified": self.certified,
            "crossings": [c.to_dict() for c in self.crossings],
        }


# ---------------------------------------------------------------------------
# Maslov index via crossing forms
# ---------------------------------------------------------------------------


def _clm_from_crossings(crossings: Sequence[Crossing], T: float) -> int:
    total = 0
    for c in crossings:
        if c.instant <= 1e-12 * max(T, 1.0):
            total += c.coindex
        elif c.instant >= T * (1.0 - 1e-12):
            total -= c.index
        else:
            total += c.signature
    return total


def _clm_regular_attempt(path: SymplecticPath, tol: float, nodes: int) -> Optional[tuple[int, list[Crossing]]]:
    """Direct crossing-form evaluation; None if any crossing is unusable."""
    scan = find_crossings(path, tol=tol, nodes=nodes)
    if scan.degenerate_everywhere:
        return None
    crossings = []
    for t in scan.instants:
        try:
            c = crossing_form_graph(path, t)
        except DegenerateCrossingError:
            return None
        if not c.regular:
            return None
        crossings.append(c)
    return _clm_from_crossings(crossings, path.duration), crossings


def clm_index(
    path: SymplecticPath,
    epsilon: Optional[float] = None,
    tol: float = 1e-9,
    nodes: int = DEFAULT_SCAN_NODES,
) -> IndexResult:
    """Maslov index of the graph path of a dim-2 path relative to the diagonal.

    Regular case: coindex of the form at 0, plus interior signatures, minus
    the index of the form at T.  Paths with degenerate crossings (shear-type
    segments inside the singular set, or d(t*) ~ 0) are replaced by
    e^{-eps J} psi and the value is certified by halving eps; a value that
    changes under halving is returned with ``certified=False``, never
    silently.

    Only the diagonal reference Lagrangian is supported.
    """
    if path.dim != 2:
        raise DimensionError("clm_index is implemented for dim-2 paths")

    direct = _clm_regular_attempt(path, tol, nodes)
    if direct is not None:
        value, crossings = direct
        return IndexResult(
            value=value,
            method=CROSSING_FORMS,
            epsilon_used=0.0,
            crossings=tuple(crossings),
        )

    eps = epsilon if epsilon is not None else (
        EPS_CLOSED_FORM if path.kind == symcore.CLOSED_FORM else EPS_SAMPLED
    )
    values = []
    crossings_last: list[Crossing] = []
    for k, (e, n) in enumerate([(eps, nodes), (eps / 2, 2 * nodes), (eps / 4, 2 * nodes)]):
        perturbed = symcore.path_perturb(path, e)
        attempt = _clm_regular_attempt(perturbed, tol, n)
        if attempt is None:
            raise NonTransverseCrossingError(
                f"perturbed path still has irregular crossings at eps = {e}"
            )
        values.append(attempt[0])
        crossings_last = attempt[1]
    certified = values[0] == values[1] == values[2]
    return IndexResult(
        value=values[-1],
        method=CROSSING_FORMS,
        epsilon_used=eps / 4,
        crossings=tuple(crossings_last),
        certified=certified,
    )


def rs_index(path: SymplecticPath, **kwargs) -> Fraction:
    """Half-integer variant: clm minus half the endpoint kernel defect.

    Returns clm - (h(0) - h(T)) / 2 exactly, where h(t) is the kernel
    dimension of psi(t) - I.
    """
    clm = clm_index(path, **kwargs)
    h0 = _kernel_dim(path.at(0.0))
    h1 = _kernel_dim(path.end())
    return Fraction(clm.value) - Fraction(h0 - h1, 2)


def _kernel_dim(m: np.ndarray) -> int:
    s = np.linalg.svd(m - np.eye(m.shape[0]), compute_uv=False)
    return int(np.sum(s <= max(KERNEL_SV_RTOL * max(s[0], 1.0), 1e-12)))


# ---------------------------------------------------------------------------
# Conley-Zehnder index via signed intersection counting
# ---------------------------------------------------------------------------


def _weighted_rotation(dim: int, eps: float, weights: Sequence[float]) -> np.ndarray:
    """Exact e^{-eps J W} for diagonal positive W (plane-by-plane rotation)."""
    if dim == 2:
        wx, wy = weights
        nu = math.sqrt(wx * wy)
        th = eps * nu
        return np.array(
            [
                [math.cos(th), (wy / nu) * math.sin(th)],
                [-(wx / nu) * math.sin(th), math.cos(th)],
            ]
        )
    wx1, wx2, wy1, wy2 = weights
    b1 = _weighted_rotation(2, eps, (wx1, wy1))
    b2 = _weighted_rotation(2, eps, (wx2, wy2))
    return symcore.symplectic_sum(b1, b2)


def _indicator_of_mats(mats: np.ndarray, dim: int) -> np.ndarray:
    n = dim // 2
    return (-1.0) ** (n - 1) * np.linalg.det(mats - np.eye(dim))


@dataclass
class _CountOutcome:
    value: int
    crossings: list[Crossing]


def _golden_extremum(
    f: Callable[[float], float], a: float, b: float, direction: float, iters: int = 90
) -> tuple[float, float]:
    """Golden-section extremum of signed f on [a, b]; direction=+1 minimizes."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = direction * f(x1), direction * f(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = direction * f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = direction * f(x2)
        if b - a < 1e-15 * max(abs(b), 1.0):
            break
    x = 0.5 * (a + b)
    return x, f(x)


def _count_signed_crossings(
    path: SymplecticPath,
    rot: np.ndarray,
    nodes: int,
    extra_times: Optional[np.ndarray] = None,
    junction: Optional[float] = None,
) -> _CountOutcome:
    """Signed crossings of t -> I(rot @ path(t)) over the scan grid.

    Besides plain sign-change cells, every same-sign local extremum that
    could hide a crossing pair (a positive local minimum or a negative
    local maximum), the two boundary cells, and the cells around the
    concatenation junction are refined by a golden-section search on the
    signed indicator; a refined extremum whose value flips sign yields the
    two bracketed roots.  Raises NonTransverseCrossingError when a zero
    cannot be resolved transversally and EpsilonTooLargeError when an
    endpoint sits on the singular set.
    """
    dim = path.dim
    T = path.duration
    ts = np.linspace(0.0, T, nodes + 1)
    if extra_times is not None:
        ts = np.unique(np.concatenate([ts, extra_times]))
    mats = path.at_many(ts)
    vals = _indicator_of_mats(rot @ mats, dim)
    n_cells = len(ts) - 1

    scale = max(float(np.max(np.abs(vals))), 1e-30)
    if abs(vals[0]) < 1e-13 * scale or abs(vals[-1]) < 1e-13 * scale:
        raise EpsilonTooLargeError("path endpoint lies on the singular set; increase eps")
    if np.any(vals == 0.0):
        raise NonTransverseCrossingError("exact zero of the indicator at a grid node")

    def f(t: float) -> float:
        m = rot @ path.at(t)
        return float(_indicator_of_mats(m[None, :, :], dim)[0])

    roots: list[float] = []

    def push_root(t: float) -> None:
        for existing in roots:
            if abs(existing - t) <= 1e-11 * max(T, 1.0):
                return
        roots.append(t)

    sign_change = (vals[:-1] < 0) != (vals[1:] < 0)
    for i in np.nonzero(sign_change)[0]:
        push_root(_bisect_zero(f, ts[i], ts[i + 1], vals[i], vals[i + 1], BISECT_RTOL))

    # Candidate brackets for hidden crossing pairs.  Nearby candidates
    # (plateaus, including the one-ulp alternation that linear interpolation
    # of sampled paths produces) merge into a single run, and runs whose
    # |indicator| contrast against their surroundings is at rounding level
    # are skipped: a dip that flat cannot bracket a sign change.
    brackets: list[tuple[float, float]] = []
    interior = np.arange(1, len(ts) - 1)
    is_min = (vals[interior] <= vals[interior - 1]) & (vals[interior] <= vals[interior + 1])
    is_max = (vals[interior] >= vals[interior - 1]) & (vals[interior] >= vals[interior + 1])
    candidate = (is_min & (vals[interior] > 0)) | (is_max & (vals[interior] < 0))
    cand_idx = [
        int(i) for i in interior[candidate] if not (sign_change[i - 1] or sign_change[i])
    ]

    def push_run(i0: int, i1: int) -> None:
        lo = max(i0 - 1, 0)
        hi = min(i1 + 1, len(ts) - 1)
        contrast = max(abs(vals[lo]), abs(vals[hi])) - float(np.min(np.abs(vals[i0 : i1 + 1])))
        if contrast > 1e-11 * scale:
            brackets.append((ts[lo], ts[hi]))

    run_start: Optional[int] = None
    prev_i: Optional[int] = None
    for i in cand_idx + [None]:  # sentinel flushes the last run
        if run_start is None:
            run_start = i
        elif i is None or i > prev_i + 2:
            push_run(run_start, prev_i)
            run_start = i
        prev_i = i
    if not sign_change[0]:
        brackets.append((ts[0], ts[1]))
    if not sign_change[n_cells - 1]:
        brackets.append((ts[-2], ts[-1]))
    if junction is not None:
        k = int(np.searchsorted(ts, junction))
        lo, hi = max(k - 2, 0), min(k + 2, len(ts) - 1)
        brackets.append((ts[lo], ts[hi]))

    for a, b in brackets:
        fa, fb = f(a), f(b)
        if fa == 0.0 or fb == 0.0:
            raise NonTransverseCrossingError("indicator vanishes at a bracket endpoint")
        if (fa < 0) != (fb < 0):
            # odd number of crossings here: the cell scan already has them,
            # and grid doubling separates any pair sharing the bracket
            continue
        direction = 1.0 if fa > 0 else -1.0
        x_star, v_star = _golden_extremum(f, a, b, direction)
        if (v_star < 0) == (fa < 0):
            if abs(v_star) < 1e-11 * scale:
                raise NonTransverseCrossingError(
                    f"unresolved tangency near t = {x_star} (extremum {v_star:.2e})"
                )
            continue
        push_root(_bisect_zero(f, a, x_star, fa, v_star, BISECT_RTOL))
        push_root(_bisect_zero(f, x_star, b, v_star, fb, BISECT_RTOL))

    roots.sort()
    total = 0
    crossings: list[Crossing] = []
    eye = np.eye(dim)
    probe = 1e-7 * max(T, 1.0)
    for t_star in roots:
        f_left = f(max(t_star - probe, 0.0))
        f_right = f(min(t_star + probe, T))
        if f_left == 0.0 or f_right == 0.0 or (f_left < 0) == (f_right < 0):
            raise NonTransverseCrossingError(f"could not read a sign change across t = {t_star}")
        s_path = 1 if f_right > 0 else -1
        m_star = rot @ path.at(t_star)
        orient = symcore.orientation_derivative(m_star)
        if abs(orient) < 1e-10:
            raise NonTransverseCrossingError(
                f"transverse-orientation derivative ~ 0 at crossing t = {t_star}"
            )
        s_orient = 1 if orient > 0 else -1
        total += s_path * s_orient
        svals = np.linalg.svd(m_star - eye, compute_uv=False)
        kdim = int(np.sum(svals <= 1e-7 * max(svals[0], 1.0)))
        crossings.append(
            Crossing(
                instant=float(t_star),
                kernel_dim=max(kdim, 1),
                form_matrix=np.array([[float(s_path * s_orient)]]),
                index=1 if s_path * s_orient < 0 else 0,
                coindex=1 if s_path * s_orient > 0 else 0,
                nullity=0,
            )
        )
    return _CountOutcome(value=total, crossings=crossings)


def cz_index_intersection(
    path: SymplecticPath,
    epsilon: Optional[float] = None,
    nodes: Optional[int] = None,
) -> IndexResult:
    """Conley-Zehnder index of a path starting at the identity.

    The path is prefixed with the reference retraction (hyperbolic matrix
    to identity), the whole concatenation is multiplied by the exact
    perturbation e^{-eps J W}, and the signed transversal crossings of the
    determinant indicator are summed; the sign at each crossing is the sign
    of dI/dt times the transverse-orientation sign at the crossing matrix.

    Certification reruns with eps/2 on a doubled grid (and eps/4 for
    closed-form paths); disagreement is returned as ``certified=False``.
    """
    dim = path.dim
    path.require_identity_start()
    eps0 = epsilon if epsilon is not None else (
        EPS_CLOSED_FORM if path.kind == symcore.CLOSED_FORM else EPS_SAMPLED
    )
    base_nodes = nodes if nodes is not None else _default_cz_nodes(path)
    weights = _WEIGHTS[dim]

    prefix = symcore.reference_retraction(path.duration, dim)
    full = symcore.path_concat(prefix, path, tol=max(path.symp_tol, 1e-7))
    # A light cluster of extra nodes around the junction, where perturbation
    # scale structures concentrate; sampled paths need no denser base grid
    # than this because their crossing features are set by eps, not by the
    # integration step.
    extra = prefix.duration + np.linspace(-0.01, 0.01, 65) * path.duration
    extra = extra[(extra > 0) & (extra < full.duration)]

    levels = [(eps0, base_nodes), (eps0 / 2, 2 * base_nodes)]
    if path.kind == symcore.CLOSED_FORM:
        levels.append((eps0 / 4, 4 * base_nodes))

    junction = prefix.duration
    values: list[int] = []
    outcome_final: Optional[_CountOutcome] = None
    for eps, n in levels:
        outcome = _count_at_level(full, dim, eps, n, weights, extra, junction)
        values.append(outcome.value)
        outcome_final = outcome

    certified = len(set(values)) == 1
    if not certified:
        # one retry at finer resolution before giving up on certification
        eps, n = levels[-1][0] / 2, levels[-1][1] * 2
        outcome = _count_at_level(full, dim, eps, n, weights, extra, junction)
        values.append(outcome.value)
        outcome_final = outcome
        certified = values[-1] == values[-2]

    assert outcome_final is not None
    shift = prefix.duration
    crossings = tuple(
        Crossing(
            instant=c.instant - shift,
            kernel_dim=c.kernel_dim,
            form_matrix=c.form_matrix,
            index=c.index,
            coindex=c.coindex,
            nullity=c.nullity,
        )
        for c in outcome_final.crossings
    )
    return IndexResult(
        value=values[-1],
        method=INTERSECTION_COUNT,
        epsilon_used=levels[-1][0] if certified else levels[-1][0] / 2,
        crossings=crossings,
        certified=certified,
    )


def _default_cz_nodes(path: SymplecticPath) -> int:
    return DEFAULT_SCAN_NODES


def _count_at_level(
    full: SymplecticPath,
    dim: int,
    eps: float,
    n: int,
    weights: Sequence[float],
    extra: Optional[np.ndarray],
    junction: Optional[float],
) -> _CountOutcome:
    """Count at one eps level: double the scan grid until the crossing set
    stabilizes, re-weighting the perturbation if a tangency survives."""
    w = list(weights)
    last_err: Optional[Exception] = None
    for attempt in range(3):
        rot = _weighted_rotation(dim, eps, w)
        try:
            prev: Optional[_CountOutcome] = None
            nodes_now = n
            for _ in range(6):
                out = _count_signed_crossings(full, rot, nodes_now, extra, junction)
                if prev is not None and out.value == prev.value and len(out.crossings) == len(prev.crossings):
                    return out
                prev = out
                nodes_now *= 2
            return prev  # type: ignore[return-value]
        except NonTransverseCrossingError as err:
            last_err = err
            # deterministic re-weighting within the admissible cone
            w = [wi * (1.0 + 0.37 * (k + 1) * (attempt + 1)) for k, wi in enumerate(w)]
    raise NonTransverseCrossingError(
        f"could not transversalize crossings after re-weighting: {last_err}"
    )


def cz_from_clm(path: SymplecticPath, **kwargs) -> int:
    """Conley-Zehnder index through the graph-path Maslov index.

    For a dim-2 path starting at the identity this is clm - 1.  Dim-4 paths
    are supported only when built as an interleaved sum of two dim-2 paths
    (componentwise additivity); general dim-4 crossing forms are out of
    scope.
    """
    path.require_identity_start()
    if path.dim == 2:
        return clm_index(path, **kwargs).value - 1
    raise DimensionError(
        "cz_from_clm supports dim-2 paths; for dim-4 interleaved sums use "
        "componentwise additivity"
    )
