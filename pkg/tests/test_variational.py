"""Tests for the dispersion functionals and the transverse minimization."""

import math

import numpy as np
import pytest

from relbosons import kg_fields
from relbosons.eigensolver import ALPHA_GOLDEN, GOLDEN_GAMMA
from relbosons.potentials import INFINITY, d_parameter, spec_spin0, spec_spin1
from relbosons.variational import (CylindricalGrid, DispersionFunctional,
                                   DivergentWeightError, RadialMomentumGrid,
                                   check_connection, default_transverse_init,
                                   dispersion_pair, euler_lagrange_residual,
                                   longitudinal_functional,
                                   minimize_transverse_massless, norm_and_dp2,
                                   position_dispersion_momentum, rayleigh_gamma,
                                   rescaled_profile, separation_oracle,
                                   spin0_functional, closed_form_readings,
                                   transverse_massless_functional,
                                   transverse_nonrel_functional)


class TestWeights:
    def test_spin0_weight_limits(self):
        q = np.array([0.3, 1.0, 4.0])
        assert spin0_functional(0.0).weight(q) == pytest.approx(np.zeros(3))
        assert spin0_functional(INFINITY).weight(q) == pytest.approx(1.0 / q**2)
        w = spin0_functional(1.0).weight(np.array([1.0]))
        assert w[0] == pytest.approx(0.5 + 0.125)

    def test_longitudinal_weight_limits(self):
        q = np.array([0.5, 2.0])
        assert longitudinal_functional(0.0).weight(q) == pytest.approx(2.0 / q**2)
        assert longitudinal_functional(INFINITY).weight(q) == pytest.approx(1.0 / q**2)

    def test_transverse_weights(self):
        q = np.array([0.5, 2.0])
        assert transverse_nonrel_functional().weight(q) == pytest.approx(np.zeros(2))
        assert transverse_massless_functional().weight(q) == pytest.approx(1.0 / q**2)

    def test_weight_matches_canonical_potential(self):
        # W(q) = weight(q) + q^2 for the matching eigensolver channel
        from relbosons.potentials import effective_potential

        q = np.linspace(0.2, 6.0, 40)
        for d in (0.0, 0.8, 2.0, INFINITY):
            assert spin0_functional(d).weight(q) + q**2 == pytest.approx(
                effective_potential(q, spec_spin0(d)), rel=1e-13)
            assert longitudinal_functional(d).weight(q) + q**2 == pytest.approx(
                effective_potential(q, spec_spin1(d)), rel=1e-13)

    def test_kind_validation(self):
        with pytest.raises(ValueError):
            DispersionFunctional("nope")
        with pytest.raises(ValueError):
            DispersionFunctional("spin0", d=-1.0)


class TestDispersionPair:
    def test_gaussian_nonrelativistic(self):
        grid = RadialMomentumGrid()
        q = grid.q
        dq2, drq2 = dispersion_pair((grid, np.exp(-q * q / 2)), spin0_functional(0.0))
        assert dq2 == pytest.approx(1.5, abs=1e-5)
        assert drq2 == pytest.approx(1.5, abs=1e-5)

    def test_massless_limit_profile(self):
        grid = RadialMomentumGrid()
        q = grid.q
        f = q ** (ALPHA_GOLDEN - 1.0) * np.exp(-q * q / 2)
        gam = rayleigh_gamma((grid, f), spin0_functional(INFINITY))
        assert gam == pytest.approx(GOLDEN_GAMMA, abs=1e-4)

    def test_transverse_massless_product_state(self):
        # q_perp Gaussian: separable planar level 2 plus line level 1/2
        grid = CylindricalGrid()
        qp, qz = grid.q_perp[:, None], grid.q_z[None, :]
        f = qp * np.exp(-(qp**2 + qz**2) / 2.0)
        gam = rayleigh_gamma((grid, f), transverse_massless_functional())
        assert gam == pytest.approx(2.5, abs=1e-3)

    def test_wrong_width_gaussian_keeps_product(self):
        # scale invariance of the d = 0 product: (3, 3/4) multiply to (3/2)^2
        grid = RadialMomentumGrid()
        q = grid.q
        dq2, drq2 = dispersion_pair((grid, np.exp(-q * q / 4)), spin0_functional(0.0))
        assert dq2 == pytest.approx(3.0, abs=1e-4)
        assert drq2 == pytest.approx(0.75, abs=1e-5)
        assert math.sqrt(dq2 * drq2) == pytest.approx(1.5, abs=1e-5)

    def test_excited_trial_exceeds_bound(self):
        grid = RadialMomentumGrid()
        q = grid.q
        gam = rayleigh_gamma((grid, (1.0 + q * q) * np.exp(-q * q / 2)),
                             spin0_functional(0.0))
        assert gam > 1.5

    def test_geometry_mismatch_rejected(self):
        grid = RadialMomentumGrid()
        with pytest.raises(ValueError):
            dispersion_pair((grid, np.exp(-grid.q)), transverse_massless_functional())
        cyl = CylindricalGrid(q_max=4.0, step=0.1)
        f = default_transverse_init(cyl)
        with pytest.raises(ValueError):
            dispersion_pair((cyl, f), spin0_functional(0.0))

    def test_divergent_axis_state_rejected(self):
        grid = CylindricalGrid(q_max=4.0, step=0.05)
        qp, qz = grid.q_perp[:, None], grid.q_z[None, :]
        spherical = np.sqrt(qp**2 + qz**2) * np.exp(-(qp**2 + qz**2))
        with pytest.raises(DivergentWeightError):
            dispersion_pair((grid, spherical), transverse_massless_functional())


class TestScaleInvariance:
    @pytest.mark.parametrize("d", [0.0, INFINITY])
    def test_invariant_for_homogeneous_weights(self, d):
        grid = RadialMomentumGrid(q_max=12.0, n=48000)
        q = grid.q
        # the d = inf trial carries the origin power of that channel so
        # the weighted integrand vanishes at q = 0 as it must physically
        a = 0.0 if d == 0.0 else ALPHA_GOLDEN - 1.0
        base = lambda s: (s * q) ** a * (1.0 + (s * q) ** 2) * np.exp(
            -((s * q) ** 2) / 2.0)
        fun = spin0_functional(d)
        g1 = rayleigh_gamma((grid, base(1.0)), fun)
        for s in (0.8, 1.25):
            gs = rayleigh_gamma((grid, base(s)), fun)
            assert abs(gs - g1) <= 1e-8 * g1

    def test_grid_equivariance_transverse(self):
        # exact discrete equivariance: scaling state and grid together
        s = 1.5
        g1 = CylindricalGrid(q_max=6.0, step=0.05)
        g2 = CylindricalGrid(q_max=6.0 * s, step=0.05 * s)
        fun = transverse_massless_functional()
        f1 = default_transverse_init(g1)
        qp, qz = g2.q_perp[:, None] / s, g2.q_z[None, :] / s
        f2 = (qp / s) * np.exp(-(qp**2 + qz**2)) * s  # same shape function
        gam1 = rayleigh_gamma((g1, f1), fun)
        gam2 = rayleigh_gamma((g2, f2), fun)
        assert gam2 == pytest.approx(gam1, rel=1e-12)

    def test_scale_dependence_at_finite_d(self):
        # d fixes the scale: the product must move under rescaling
        grid = RadialMomentumGrid()
        q = grid.q
        fun = spin0_functional(1.0)
        g1 = rayleigh_gamma((grid, np.exp(-q * q / 2.0)), fun)
        g2 = rayleigh_gamma((grid, np.exp(-(2.0 * q) ** 2 / 2.0)), fun)
        assert abs(g2 - g1) > 1e-3


class TestVariationalBound:
    def test_nonrelativistic_trials_bounded_below(self):
        grid = RadialMomentumGrid(q_max=12.0, n=8000)
        q = grid.q
        fun = spin0_functional(0.0)
        trials = [np.exp(-q * q / 4.0), (1.0 + q * q) * np.exp(-q * q / 2.0),
                  q * np.exp(-q * q / 1.7), np.exp(-q) * q]
        for f in trials:
            assert rayleigh_gamma((grid, f), fun) >= 1.5 - 1e-6

    def test_massless_trials_bounded_below(self):
        grid = RadialMomentumGrid(q_max=12.0, n=8000)
        q = grid.q
        fun = spin0_functional(INFINITY)
        a = ALPHA_GOLDEN - 1.0
        trials = [q**a * np.exp(-q * q / 2.0), q**a * np.exp(-q * q / 3.0),
                  q**a * (1.0 + 0.5 * q * q) * np.exp(-q * q / 2.0),
                  q * np.exp(-q * q / 2.0)]
        for f in trials:
            assert rayleigh_gamma((grid, f), fun) >= GOLDEN_GAMMA - 1e-6

    def test_longitudinal_trials_bounded_below(self):
        grid = RadialMomentumGrid(q_max=12.0, n=8000)
        q = grid.q
        fun = longitudinal_functional(0.0)
        for f in (q * np.exp(-q * q / 2.0), q * np.exp(-q * q / 3.0),
                  q * (1.0 + q) * np.exp(-q * q / 2.0)):
            assert rayleigh_gamma((grid, f), fun) >= 2.5 - 1e-6


class TestCrossModule:
    def test_rescaled_dispersion_matches_position_space(self):
        # Delta r_q^2 of the rescaled profile = (m d)^2 Delta r^2(physical)
        rng = np.random.default_rng(3)
        grid = RadialMomentumGrid(q_max=14.0, n=12000)
        for _ in range(3):
            b = rng.uniform(0.6, 1.4)
            a = rng.uniform(0.0, 1.0)
            mass = rng.uniform(0.7, 2.0)
            f = lambda p: (1.0 + a * np.asarray(p) ** 2) * np.exp(
                -np.asarray(p) ** 2 / (2.0 * b * b))
            _, dp2 = norm_and_dp2(f, p_max=16.0 * b)
            dr2 = position_dispersion_momentum(f, mass, p_max=16.0 * b)
            d = d_parameter(dp2, dr2, mass)
            fq = rescaled_profile(f, mass, d)
            dq2_r, drq2_r = dispersion_pair((grid, fq(grid.q)), spin0_functional(d))
            assert drq2_r == pytest.approx((mass * d) ** 2 * dr2, rel=1e-5)
            # the self-consistent rescaling balances the state exactly
            assert dq2_r == pytest.approx(drq2_r, rel=1e-4)

    def test_position_route_validates_momentum_weight(self):
        f = lambda p: np.exp(-np.asarray(p) ** 2 / 2.0)
        direct = kg_fields.position_dispersion_direct(f, 1.3, r_max=30.0, p_max=12.0)
        mom = position_dispersion_momentum(f, 1.3, p_max=12.0)
        assert direct == pytest.approx(mom, rel=1e-6)


class TestTransverseMinimization:
    def test_wrong_width_init(self, transverse_state):
        assert transverse_state.gamma == pytest.approx(2.5, abs=1e-2)
        assert transverse_state.meta["iterations"] < 400

    def test_random_positive_init(self):
        grid = CylindricalGrid()
        rng = np.random.default_rng(7)
        qp, qz = grid.q_perp[:, None], grid.q_z[None, :]
        init = qp * (0.5 + rng.random((len(grid.q_perp), len(grid.q_z)))) \
            * np.exp(-0.3 * (qp**2 + qz**2))
        state = minimize_transverse_massless(grid, init)
        assert state.gamma == pytest.approx(2.5, abs=1e-2)

    def test_balance_at_minimum(self, transverse_state):
        assert abs(transverse_state.delta_q2 - transverse_state.delta_rq2) <= 1e-4

    def test_euler_lagrange_residual(self, transverse_state):
        assert euler_lagrange_residual(transverse_state) <= 1e-3

    def test_minimizer_factorizes(self, transverse_state):
        grid = transverse_state.geometry
        f = transverse_state.f_samples / np.max(transverse_state.f_samples)
        qp = grid.q_perp[:, None]
        q2 = qp**2 + grid.q_z[None, :] ** 2
        mask = f > 1e-3
        coef = np.polyfit(q2[mask], np.log(f[mask])
                          - np.log(np.broadcast_to(qp, f.shape)[mask]), 1)
        model = qp * np.exp(coef[0] * q2 + coef[1])
        assert np.max(np.abs(f - model / np.max(model))) <= 1e-3

    def test_grid_refinement_improves(self):
        coarse = minimize_transverse_massless(CylindricalGrid(step=0.08))
        fine = minimize_transverse_massless(CylindricalGrid(step=0.04))
        assert abs(coarse.gamma - 2.5) / abs(fine.gamma - 2.5) >= 3.0

    def test_separation_oracle_value(self):
        assert separation_oracle() == pytest.approx(2.5, abs=1e-6)

    def test_closed_form_readings(self):
        report = closed_form_readings()
        assert report["qperp_times_full_gaussian"] == pytest.approx(2.5, abs=1e-3)
        assert report["qperp_dependence_only"] > 2.5
        assert "divergent" in report["spherical_magnitude"]

    def test_rejects_divergent_init(self):
        grid = CylindricalGrid(q_max=4.0, step=0.1)
        bad = np.ones((len(grid.q_perp), len(grid.q_z)))
        with pytest.raises(DivergentWeightError):
            minimize_transverse_massless(grid, bad)


class TestConnection:
    def test_longitudinal_identity(self):
        rng = np.random.default_rng(0)
        rep = check_connection("longitudinal", rng.normal(scale=2.0, size=(100, 3)), 1.0)
        assert rep.max_residual <= 1e-13
        assert rep.norm_fields == pytest.approx(rep.norm_plain, rel=1e-12)

    def test_longitudinal_zero_momentum_finite(self):
        momenta = np.array([[0.0, 0.0, 0.0], [1e-30, 0.0, 0.0]])
        rep = check_connection("longitudinal", momenta, 1.0)
        assert math.isfinite(rep.max_residual)
        assert np.all(np.isfinite(rep.pi_tilde))

    def test_transverse_norm_reduction(self):
        rng = np.random.default_rng(1)
        rep = check_connection("transverse", rng.normal(scale=2.0, size=(64, 3)), 1.0)
        assert rep.max_residual <= 1e-13
        assert rep.norm_fields == pytest.approx(rep.norm_reduced, rel=1e-8)
        # at finite mass the energy norm sits below the plain norm
        assert 0.5 * rep.norm_plain <= rep.norm_fields <= rep.norm_plain

    def test_transverse_massless_limit_collapses_to_plain_forms(self):
        rng = np.random.default_rng(2)
        mom = rng.normal(scale=2.0, size=(32, 3))
        rep = check_connection("transverse", mom, 1e-6)
        assert rep.norm_fields == pytest.approx(rep.norm_plain, rel=1e-9)
        assert rep.dp2_fields == pytest.approx(rep.dp2_plain, rel=1e-9)

    def test_longitudinal_needs_mass(self):
        with pytest.raises(ValueError):
            check_connection("longitudinal", np.ones((3, 3)), 0.0)
        with pytest.raises(ValueError):
            check_connection("sideways", np.ones((3, 3)), 1.0)
