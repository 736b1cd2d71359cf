"""Crossing machinery and the two index engines."""

import math
from fractions import Fraction

import numpy as np
import pytest

from symindex import maslov, symcore
from symindex.analytic import FamilyKind, PathFamily, exp_js_path, family_path
from symindex.errors import DegenerateCrossingError, DimensionError, EpsilonTooLargeError
from symindex.maslov import (
    Crossing,
    LagrangianFrame,
    clm_index,
    crossing_form_graph,
    cz_from_clm,
    cz_index_intersection,
    diagonal_frame,
    find_crossings,
    graph_of,
    intersection_dim,
    rs_index,
)
from symindex.symcore import closed_form_path, constant_path, path_sum, rotation2

from conftest import random_sp2


def rotation_family(a1, a2, T):
    return family_path(PathFamily(FamilyKind.ROTATION_R, T=T, a1=a1, a2=a2))


def shear_family(sign, T):
    return family_path(PathFamily(FamilyKind.SHEAR, T=T, f_sign=sign))


class TestLagrangianFrames:
    def test_graph_of_identity_is_diagonal(self):
        assert intersection_dim(graph_of(np.eye(2)), diagonal_frame(4)) == 2

    def test_graph_of_shear_columns(self):
        frame = graph_of(np.array([[1.0, 1.0], [0.0, 1.0]]))
        # spanned by (1,0,1,0) and (0,1,1,1)
        target = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 1.0]])
        combo, _, _, _ = np.linalg.lstsq(frame.basis, target, rcond=None)
        assert np.allclose(frame.basis @ combo, target, atol=1e-12)

    def test_graphs_are_isotropic(self, rng):
        # constructor enforces isotropy; 20 random matrices must all pass
        for _ in range(20):
            graph_of(random_sp2(rng))

    def test_dependent_columns_rejected(self):
        basis = np.zeros((4, 2))
        basis[:, 0] = [1.0, 0.0, 1.0, 0.0]
        basis[:, 1] = [2.0, 0.0, 2.0, 0.0]
        with pytest.raises(ValueError):
            LagrangianFrame(basis)

    def test_intersection_dims(self):
        delta = diagonal_frame(4)
        assert intersection_dim(delta, delta) == 2
        assert intersection_dim(delta, graph_of(rotation2(math.pi / 2))) == 0
        assert intersection_dim(delta, graph_of(np.array([[1.0, 1.0], [0.0, 1.0]]))) == 1


class TestFindCrossings:
    def test_full_rotation(self):
        scan = find_crossings(rotation_family(1.0, 1.0, 2 * math.pi))
        assert not scan.degenerate_everywhere
        assert np.allclose(scan.instants, [0.0, 2 * math.pi], atol=1e-9)

    def test_shear_is_degenerate_everywhere(self):
        scan = find_crossings(shear_family(1, 3.0))
        assert scan.degenerate_everywhere

    def test_tangential_crossings_reported_not_dropped(self):
        # an interior full-rotation instant touches the singular set without
        # a determinant sign change; it must come back flagged
        scan = find_crossings(rotation_family(1.0, 1.0, 3 * math.pi))
        assert any(abs(t - 2 * math.pi) < 1e-6 for t in scan.instants)
        assert any(abs(t - 2 * math.pi) < 1e-6 for t in scan.tangent_suspects)

    def test_exp_js_crossing_lattice(self):
        # S = diag(4, 1) has frequency 2, so crossings sit at multiples of pi;
        # oracle: brute-force scan of det(psi - I) on a fine grid
        path = exp_js_path(np.diag([4.0, 1.0]), 2 * math.pi)
        ts = np.linspace(0.0, 2 * math.pi, 20001)
        dets = np.linalg.det(path.at_many(ts) - np.eye(2))
        brute = ts[np.abs(dets) < 1e-6]
        assert {round(t / math.pi) for t in brute} == {0, 1, 2}

        scan = find_crossings(path)
        assert np.allclose(scan.instants, [0.0, math.pi, 2 * math.pi], atol=1e-9)


class TestCrossingForms:
    def test_rotation_interior_crossing(self):
        path = rotation_family(1.0, 4.0, 2 * math.pi)  # beta = 2, crossing at pi
        c = crossing_form_graph(path, math.pi)
        assert c.kernel_dim == 2
        assert c.regular
        assert (c.coindex, c.index, c.nullity) == (2, 0, 0)
        assert c.signature == 2

    def test_shear_at_start_counts_nondegenerate_part(self):
        c = crossing_form_graph(shear_family(-1, 2.0), 0.0)
        assert c.kernel_dim == 2
        assert (c.coindex, c.index, c.nullity) == (1, 0, 1)
        assert not c.regular

    def test_sign_reversed_rotation_has_negative_form(self):
        # recompute the rotation example with flipped off-diagonals:
        # the form turns negative definite, signature -2
        path = family_path(PathFamily(FamilyKind.ROTATION_S, T=2 * math.pi, a1=1.0, a2=4.0))
        c = crossing_form_graph(path, math.pi)
        assert (c.coindex, c.index, c.nullity) == (0, 2, 0)
        assert c.signature == -2

    def test_inertia_always_adds_up(self, rng):
        for _ in range(20):
            a1, a2 = rng.uniform(0.3, 3.0, 2)
            path = rotation_family(float(a1), float(a2), 2 * math.pi / math.sqrt(a1 * a2))
            c = crossing_form_graph(path, path.duration)
            assert c.index + c.coindex + c.nullity == c.kernel_dim

    def test_d_near_zero_raises(self):
        # crossing matrix [[2, b], [-1/b, 0]] has eigenvalue 1 and d = 0
        m_star = np.array([[2.0, 1.0], [-1.0, 0.0]])
        path = closed_form_path(2, 2.0, lambda t: m_star @ rotation2(t - 1.0))
        assert abs(np.linalg.det(path.at(1.0) - np.eye(2))) < 1e-12
        with pytest.raises(DegenerateCrossingError):
            crossing_form_graph(path, 1.0)


class TestClmIndex:
    def test_full_rotation(self):
        res = clm_index(rotation_family(1.0, 1.0, 2 * math.pi))
        assert (res.value, res.certified) == (2, True)
        assert res.method == maslov.CROSSING_FORMS

    def test_one_and_a_half_rotations(self):
        assert clm_index(rotation_family(1.0, 1.0, 3 * math.pi)).value == 4

    def test_shears(self):
        assert clm_index(shear_family(-1, 5.0)).value == 1
        assert clm_index(shear_family(+1, 5.0)).value == 0

    def test_no_crossing_is_zero(self):
        # a hyperbolic constant path never meets the singular set
        assert clm_index(constant_path(np.diag([2.0, 0.5]), 1.0)).value == 0

    def test_degenerate_fallback_is_certified(self):
        res = clm_index(shear_family(-1, 5.0))
        assert res.certified
        assert res.epsilon_used > 0

    def test_d_near_zero_falls_back_to_perturbation(self):
        m_star = np.array([[2.0, 1.0], [-1.0, 0.0]])
        path = closed_form_path(2, 2.0, lambda t: m_star @ rotation2(t - 1.0))
        res = clm_index(path)
        assert res.certified
        assert res.epsilon_used > 0

    def test_serialization(self):
        res = clm_index(rotation_family(1.0, 1.0, 2 * math.pi))
        data = res.to_dict()
        assert set(data) == {"value", "method", "epsilon_used", "certified", "crossings"}
        assert data["crossings"][0].keys() == {"t", "kernel_dim", "index", "coindex", "nullity"}

    def test_only_diagonal_reference_supported(self):
        with pytest.raises(DimensionError):
            clm_index(path_sum(shear_family(1, 1.0), shear_family(1, 1.0)))


class TestCzIntersection:
    def test_shears(self):
        assert cz_index_intersection(shear_family(+1, 5.0)).value == -1
        assert cz_index_intersection(shear_family(-1, 5.0)).value == 0

    def test_full_rotation_block(self):
        # frequency omega over one full period: 2 floor(1) - 1 = 1
        omega = 1.7
        path = closed_form_path(2, 2 * math.pi / omega, lambda t: rotation2(omega * t))
        res = cz_index_intersection(path)
        assert (res.value, res.certified) == (1, True)

    def test_constant_identity_is_maximally_degenerate(self):
        res = cz_index_intersection(constant_path(np.eye(2), 3.0))
        assert (res.value, res.certified) == (-1, True)

    def test_requires_identity_start(self):
        from symindex.errors import NonIdentityStartError

        with pytest.raises(NonIdentityStartError):
            cz_index_intersection(constant_path(np.diag([2.0, 0.5]), 1.0))

    def test_epsilon_too_large_detected(self):
        # path ends exactly where the perturbation maps it back to identity
        eps = 1e-3
        w = maslov._WEIGHTS[2]
        path = closed_form_path(2, 1.0, lambda t: maslov._weighted_rotation(2, -eps * t, w))
        with pytest.raises(EpsilonTooLargeError):
            cz_index_intersection(path, epsilon=eps)

    def test_homotopy_invariance_along_definite_interpolation(self):
        # linear interpolation between two positive matrices, nondegenerate
        # endpoints throughout: the index must stay constant on the grid
        s0 = np.diag([1.0, 2.0])
        s1 = np.diag([2.0, 3.0])
        values = set()
        for lam in np.linspace(0.0, 1.0, 5):
            path = exp_js_path((1 - lam) * s0 + lam * s1, 1.0)
            values.add(cz_index_intersection(path).value)
        assert values == {1}

    def test_diamond_additivity_mixed_kinds(self):
        p1 = shear_family(+1, 4.0)
        p2 = closed_form_path(2, 4.0, lambda t: rotation2(1.1 * t))
        joint = path_sum(p1, p2)
        total = cz_index_intersection(joint)
        assert total.value == cz_index_intersection(p1).value + cz_index_intersection(p2).value
        assert total.certified

    def test_sampled_and_closed_form_agree(self):
        fam = rotation_family(0.5, 3.0, 7.0)
        ts = np.linspace(0.0, 7.0, 20001)
        sampled = symcore.sampled_path(ts, fam.at_many(ts))
        assert cz_index_intersection(sampled).value == cz_index_intersection(fam).value


class TestCzFromClm:
    def test_rotation(self):
        assert cz_from_clm(rotation_family(1.0, 1.0, 2 * math.pi)) == 1

    def test_shear(self):
        assert cz_from_clm(shear_family(-1, 5.0)) == 0

    def test_additivity_against_intersection(self, rng):
        for _ in range(5):
            a = rng.uniform(0.4, 2.5, 4)
            T = float(rng.uniform(2.0, 6.0))
            p1 = rotation_family(float(a[0]), float(a[1]), T)
            p2 = rotation_family(float(a[2]), float(a[3]), T)
            lhs = cz_index_intersection(path_sum(p1, p2)).value
            assert lhs == cz_from_clm(p1) + cz_from_clm(p2)

    def test_dim4_not_supported_directly(self):
        with pytest.raises(DimensionError):
            cz_from_clm(path_sum(shear_family(1, 1.0), shear_family(1, 1.0)))


class TestRsIndex:
    def test_shear_half_integers(self):
        assert rs_index(shear_family(-1, 2.0)) == Fraction(1, 2)
        assert rs_index(shear_family(+1, 2.0)) == Fraction(-1, 2)

    def test_equals_clm_for_nondegenerate_endpoints(self):
        # rotation path started off the crossing lattice: h(0) = h(T) = 0
        path = closed_form_path(2, 1.0, lambda t: rotation2(0.5 + t))
        assert rs_index(path) == clm_index(path).value


class TestMethodAgreement:
    def test_agreement_on_spot_checks(self):
        cases = [
            rotation_family(1.0, 1.0, 2 * math.pi),
            rotation_family(0.5, 3.0, 7.0),
            family_path(PathFamily(FamilyKind.ROTATION_S, T=math.pi, a1=2.0, a2=2.0)),
            shear_family(+1, 3.0),
            shear_family(-1, 3.0),
        ]
        for path in cases:
            clm = clm_index(path)
            cz = cz_index_intersection(path)
            assert clm.value - 1 == cz.value
            assert clm.certified and cz.certified

    def test_affine_scale_invariance(self):
        path = rotation_family(2.0, 3.0, 5.0)
        base = cz_index_intersection(path).value
        for k in (2.0, 0.5):
            assert cz_index_intersection(symcore.path_rescale(path, k)).value == base
