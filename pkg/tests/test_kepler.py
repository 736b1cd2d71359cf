"""Orbit model, linearized systems, monodromy structure, Morse indices."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from symindex import kepler, symcore
from symindex.errors import (
    CollisionError,
    ConvergenceError,
    NearOriginError,
    OrbitDomainError,
)
from symindex.kepler import (
    LinearizedSystem,
    build_H,
    canonical_H,
    elements_from,
    effective_potential,
    fundamental_solution,
    homotopy_invariance_check,
    monodromy_and_stability,
    morse_index_iterate,
    radius,
    solve_eccentric_anomaly,
    winding_number,
)

TWO_PI = 2 * math.pi

# Unit tests run at the lightest resolution the refinement ladder accepts;
# the acceptance suite re-runs the full grid at the nominal 20000.
STEPS = 20000


@pytest.fixture(scope="module")
def circular():
    return elements_from(1.0, 0.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def eccentric():
    return elements_from(1.0, 0.3, 1.0, 1.0)


class TestElements:
    def test_circular_unit_case(self, circular):
        el = circular
        assert el.h == pytest.approx(-0.5, abs=1e-15)
        assert el.omega == pytest.approx(1.0, abs=1e-15)
        assert el.Tcal == pytest.approx(TWO_PI, abs=1e-14)
        assert el.T == pytest.approx(TWO_PI, abs=1e-14)
        assert el.k == pytest.approx(1.0, abs=1e-15)

    def test_angular_momentum_from_eccentricity(self):
        el = elements_from(1.0, 0.5, 1.0, 1.0)
        assert el.k**2 == pytest.approx(0.75, abs=1e-14)

    def test_anomaly_period_identity(self, rng):
        for _ in range(10):
            el = elements_from(
                float(rng.uniform(0.5, 3.0)),
                float(rng.uniform(0.0, 0.95)),
                float(rng.uniform(0.5, 2.0)),
                float(rng.uniform(0.5, 2.0)),
            )
            assert el.omega * el.Tcal == pytest.approx(TWO_PI, rel=1e-15)
            assert max(el.residuals().values()) <= 1e-12

    def test_unbounded_orbits_rejected(self):
        with pytest.raises(OrbitDomainError):
            elements_from(1.0, 1.0, 1.0, 1.0)
        with pytest.raises(OrbitDomainError):
            elements_from(1.0, 1.2, 1.0, 1.0)
        with pytest.raises(ValueError):
            elements_from(1.0, -0.1, 1.0, 1.0)


class TestEccentricAnomalySolver:
    def test_zero_anomaly(self):
        assert solve_eccentric_anomaly(0.0, 0.7) == 0.0

    def test_circular_is_identity(self, rng):
        for m_anom in rng.uniform(-10, 10, 10):
            assert solve_eccentric_anomaly(float(m_anom), 0.0) == pytest.approx(
                float(m_anom), abs=1e-14
            )

    def test_against_bisection_oracle(self):
        # independent oracle: bisection on E - ecc sin E - M over [0, pi]
        ecc, m_anom = 0.5, math.pi / 2

        lo, hi = 0.0, math.pi
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if mid - ecc * math.sin(mid) - m_anom > 0:
                hi = mid
            else:
                lo = mid
        oracle = 0.5 * (lo + hi)

        assert solve_eccentric_anomaly(m_anom, ecc) == pytest.approx(oracle, abs=1e-12)

    def test_periodicity(self):
        e0 = solve_eccentric_anomaly(0.8, 0.6)
        assert solve_eccentric_anomaly(0.8 + TWO_PI, 0.6) == pytest.approx(
            e0 + TWO_PI, abs=1e-13
        )

    def test_residual_gate(self, rng):
        for _ in range(200):
            ecc = float(rng.uniform(0.0, 0.99))
            m_anom = float(rng.uniform(-20.0, 20.0))
            e_val = solve_eccentric_anomaly(m_anom, ecc)
            assert abs(e_val - ecc * math.sin(e_val) - m_anom) <= 1e-14 * max(1.0, abs(m_anom))


class TestRadius:
    def test_circular_is_constant(self, circular):
        taus = np.linspace(0, circular.Tcal, 64)
        r, rp = radius(circular, taus)
        assert np.all(r == 1.0)
        assert np.all(rp == 0.0)

    def test_perihelion_at_zero(self):
        el = elements_from(2.0, 0.4, 1.0, 1.0)
        r0, _ = radius(el, 0.0)
        assert float(r0) == pytest.approx(el.a * (1 - el.ecc), abs=1e-14)

    def test_extrema_exact(self):
        el = elements_from(1.5, 0.7, 1.0, 1.0)
        taus = np.linspace(0, el.Tcal, 10001)
        r, _ = radius(el, taus)
        assert float(np.min(r)) == pytest.approx(el.a * (1 - el.ecc), abs=1e-12)
        assert float(np.max(r)) == pytest.approx(el.a * (1 + el.ecc), abs=1e-12)

    def test_energy_identity_along_orbit(self):
        # mu^2 r'^2 + k^2 - 2 m mu r = 2 mu r^2 h at 100 sample instants
        el = elements_from(1.3, 0.6, 0.8, 1.7)
        taus = np.linspace(0, el.Tcal, 100)
        r, rp = radius(el, taus)
        residual = el.mu**2 * rp**2 + el.k**2 - 2 * el.m * el.mu * r - 2 * el.mu * r**2 * el.h
        assert float(np.max(np.abs(residual))) <= 1e-12

    def test_old_time_conservation_residuals(self):
        # energy law in physical time and angular momentum, 256 samples
        el = elements_from(1.0, 0.5, 1.0, 1.0)
        taus = np.linspace(0, el.Tcal, 256)
        r, rp = radius(el, taus)
        r_dot = rp / r
        energy = 0.5 * el.mu * r_dot**2 + el.k**2 / (2 * el.mu * r**2) - el.m / r
        assert float(np.max(np.abs(energy - el.h))) / abs(el.h) <= 1e-9
        theta_dot = el.k / (el.mu * r**2)
        assert float(np.max(np.abs(el.mu * r**2 * theta_dot - el.k))) / el.k <= 1e-9


class TestEffectivePotential:
    def test_circular_value_is_energy(self, circular):
        assert float(effective_potential(circular, circular.a)) == pytest.approx(
            circular.h, abs=1e-14
        )

    def test_minimum_location(self):
        el = elements_from(1.0, 0.3, 1.2, 0.9)
        r_star = el.k**2 / (el.m * el.mu)
        grid = np.linspace(0.2 * r_star, 5 * r_star, 20001)
        vals = effective_potential(el, grid)
        assert grid[int(np.argmin(vals))] == pytest.approx(r_star, rel=1e-3)

    def test_negative_beyond_crossover(self):
        el = elements_from(1.0, 0.3, 1.0, 1.0)
        crossover = el.k**2 / (2 * el.m * el.mu)
        rs = np.linspace(1.001 * crossover, 10.0, 100)
        assert np.all(effective_potential(el, rs) < 0)


class TestBuildH:
    def test_constant_system_at_s0(self, eccentric):
        sys0 = LinearizedSystem(eccentric, 0.0)
        el = eccentric
        expected = np.zeros((4, 4))
        expected[0, 2] = 2 * el.h
        expected[2, 0] = 1 / el.mu
        expected[3, 1] = 1 / (el.mu * el.a)
        for tau in (0.0, 1.0, el.Tcal / 3):
            assert np.allclose(build_H(sys0, tau), expected, atol=1e-15)

    def test_characteristic_polynomial_on_grid(self, eccentric):
        # coefficients of lambda^4 + 0 lambda^3 + omega^2 lambda^2 + 0 + 0
        el = eccentric
        for s in np.linspace(0, 1, 5):
            sys_s = LinearizedSystem(el, float(s))
            for tau in np.linspace(0, el.Tcal, 32):
                coeffs = np.poly(build_H(sys_s, float(tau)))
                expected = np.array([1.0, 0.0, el.omega**2, 0.0, 0.0])
                assert np.max(np.abs(coeffs - expected)) <= 1e-10

    def test_circular_coupling_row(self, circular):
        row = build_H(LinearizedSystem(circular, 1.0), 0.7)[1]
        assert np.allclose(row, [-circular.omega, 0.0, 0.0, 0.0], atol=1e-14)


class TestCanonicalH:
    def test_hamiltonian_structure(self, eccentric, rng):
        # J H must be symmetric for the flow to be symplectic
        for s in (0.0, 0.4, 1.0):
            sys_s = LinearizedSystem(eccentric, s)
            for tau in rng.uniform(0, eccentric.Tcal, 5):
                jh = symcore.J4 @ canonical_H(sys_s, float(tau))
                assert np.max(np.abs(jh - jh.T)) < 1e-13

    def test_circular_spectrum(self, circular):
        eigs = np.sort_complex(np.linalg.eigvals(canonical_H(LinearizedSystem(circular, 1.0), 0.0)))
        expected = np.sort_complex([0, 0, 1j * circular.omega, -1j * circular.omega])
        assert np.allclose(eigs, expected, atol=1e-12)


class TestFundamentalSolution:
    def test_constant_system_matches_expm(self, eccentric):
        # s = 0 gives constant coefficients: compare against scaling-and-
        # squaring at the period
        sys0 = LinearizedSystem(eccentric, 0.0)
        sol = fundamental_solution(sys0, periods=1, steps_per_period=STEPS)
        h0 = canonical_H(sys0, 0.0)
        assert np.max(np.abs(sol.monodromy - expm(eccentric.Tcal * h0))) <= 1e-9

    def test_rotation_block_closes_at_period(self, circular):
        # the reduced-display radial block alone returns to the identity
        block = np.array([[0.0, 2 * circular.h], [1 / circular.mu, 0.0]])
        assert np.allclose(expm(circular.Tcal * block), np.eye(2), atol=1e-12)

    def test_starts_at_identity_and_reports_drift(self, eccentric):
        sol = fundamental_solution(LinearizedSystem(eccentric, 1.0), 1, STEPS)
        assert np.array_equal(sol.path.at(0.0), np.eye(4))
        assert sol.drift <= 1e-8
        assert sol.monodromy_delta < 1e-9

    def test_step_floor_enforced(self, eccentric):
        with pytest.raises(ValueError):
            fundamental_solution(LinearizedSystem(eccentric, 1.0), 1, 500)

    def test_nonconverged_at_coarse_resolution(self):
        el = elements_from(1.0, 0.5, 1.0, 1.0)
        with pytest.raises(ConvergenceError):
            fundamental_solution(LinearizedSystem(el, 1.0), 1, 1000)


class TestStability:
    def test_monodromy_structure(self, eccentric):
        rep = monodromy_and_stability(eccentric, k_max=1, steps_per_period=STEPS)
        assert rep.nullity == 3
        assert rep.rank_m_minus_i == 1
        assert all(abs(z - 1) <= 1e-6 for z in rep.multipliers)
        assert rep.elliptic and rep.spectrally_stable and not rep.linearly_stable

    def test_report_serialization(self, eccentric):
        rep = monodromy_and_stability(eccentric, k_max=2, steps_per_period=STEPS)
        data = rep.to_dict()
        assert data["morse_indices"] == {"1": 0, "2": 2}
        assert set(data["integrator"]) == {"steps", "drift", "certified"}
        assert data["integrator"]["certified"] is True
        assert len(data["multipliers"]) == 4


class TestMorseIndices:
    def test_circular_prime_orbit(self, circular):
        assert morse_index_iterate(circular, 1, steps_per_period=STEPS) == 0

    def test_half_eccentric_third_iterate(self):
        el = elements_from(1.0, 0.5, 1.0, 1.0)
        assert morse_index_iterate(el, 3, steps_per_period=STEPS) == 4

    def test_mean_index_converges_to_two(self, circular):
        for k in (2, 4):
            value = morse_index_iterate(circular, k, steps_per_period=STEPS)
            assert abs(value / k - 2.0) <= 2.0 / k

    def test_rejects_bad_iterate(self, circular):
        with pytest.raises(ValueError):
            morse_index_iterate(circular, 0)


class TestConstantSystemDecomposition:
    def test_index_splits_into_block_contributions(self, eccentric):
        # at s = 0 the system is a sum of a unipotent block (index -1) and a
        # full rotation at frequency omega (index 2 floor(1) - 1 = 1)
        from symindex import maslov
        from symindex.analytic import FamilyKind, PathFamily, analytic_cz

        el = eccentric
        sol = fundamental_solution(LinearizedSystem(el, 0.0), 1, STEPS)
        total = maslov.cz_index_intersection(sol.path)
        assert total.certified

        shear_part = analytic_cz(PathFamily(FamilyKind.SHEAR, T=el.Tcal, f_sign=+1))
        rotation_part = analytic_cz(
            PathFamily(FamilyKind.EXP_JS, T=el.Tcal, a1=2 * abs(el.h), a2=1 / el.mu, s_sign=+1)
        )
        assert (shear_part, rotation_part) == (-1, 1)
        assert total.value == shear_part + rotation_part == 0


class TestHomotopyInvariance:
    def test_invariance_small_grid(self):
        el = elements_from(1.0, 0.2, 1.0, 1.0)
        check = homotopy_invariance_check(el, [0.0, 0.5, 1.0], steps_per_period=STEPS)
        assert check
        assert check.common_index == 0
        assert all(row["nullity"] == 3 for row in check.rows)
        # every multiplier at every s sits at 1
        for row in check.rows:
            assert all(abs(z - 1) <= 1e-6 for z in row["multipliers"])

    def test_requires_both_endpoints(self, eccentric):
        with pytest.raises(ValueError):
            homotopy_invariance_check(eccentric, [0.0, 0.5])


class TestWinding:
    def test_direct_and_retrograde(self, eccentric):
        assert winding_number(eccentric) == 1
        assert winding_number(eccentric, retrograde=True) == -1

    def test_high_eccentricity(self):
        el = elements_from(1.0, 0.9, 1.0, 1.0)
        assert winding_number(el) == 1

    def test_near_collision_rejected(self):
        el = elements_from(1.0, 1.0 - 1e-10, 1.0, 1.0)
        with pytest.raises(NearOriginError):
            winding_number(el)

    def test_sample_floor(self, eccentric):
        with pytest.raises(ValueError):
            winding_number(eccentric, samples=32)


class TestExtremeEccentricityBoundary:
    """ecc = 0.9 exceeds what float64 can certify: the one-period path norm
    reaches ~1e5, so eigenvalues of the defective period map cannot be
    localized beyond ~sqrt(eps_mach |M|) ~ 4e-6 and the certified ladder
    correctly refuses.  The degeneracy structure itself is still visible."""

    def test_ladder_refuses_honestly(self):
        el = elements_from(1.0, 0.9, 1.0, 1.0)
        with pytest.raises(ConvergenceError):
            fundamental_solution(LinearizedSystem(el, 1.0), 1, STEPS)

    def test_structure_survives_at_its_own_precision(self):
        from symindex.kepler import _integrate, _nullity

        el = elements_from(1.0, 0.9, 1.0, 1.0)
        _, mats = _integrate(LinearizedSystem(el, 1.0), 1, 100000)
        monodromy = mats[-1]
        assert _nullity(monodromy) == 3
        assert all(abs(z - 1) < 1e-4 for z in np.linalg.eigvals(monodromy))
