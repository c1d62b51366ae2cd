"""Tests for the radial ground-state solver."""

import math

import numpy as np
import pytest

from relbosons.eigensolver import (GOLDEN_GAMMA, RadialGrid,
                                   analytic_cases, expectation_q2, gamma_curve,
                                   solve_ground_fd, solve_ground_shooting,
                                   verify_analytic_limits)
from relbosons.numkernel import BracketError
from relbosons.potentials import INFINITY, spec_spin0, spec_spin1


class TestShooting:
    def test_scalar_nonrelativistic(self):
        res = solve_ground_shooting(spec_spin0(0.0))
        assert res.gamma == pytest.approx(1.5, abs=1e-6)

    def test_scalar_massless(self):
        res = solve_ground_shooting(spec_spin0(INFINITY))
        assert res.gamma == pytest.approx(GOLDEN_GAMMA, abs=1e-6)
        assert res.gamma == pytest.approx(2.1180340, abs=1e-6)

    def test_longitudinal_nonrelativistic(self):
        res = solve_ground_shooting(spec_spin1(0.0))
        assert res.gamma == pytest.approx(2.5, abs=1e-6)

    def test_ground_state_nodeless(self):
        for spec in (spec_spin0(1.0), spec_spin1(0.5), spec_spin0(INFINITY)):
            res = solve_ground_shooting(spec)
            interior = res.u_samples[2:-2]
            assert np.all(interior > 0.0)

    def test_normalization(self):
        res = solve_ground_shooting(spec_spin0(0.7))
        h = res.q_samples[1] - res.q_samples[0]
        assert np.sum(res.u_samples**2) * h == pytest.approx(1.0, rel=1e-10)

    def test_discrete_residual_at_h2_scale(self):
        for spec in (spec_spin0(0.0), spec_spin1(1.0), spec_spin0(INFINITY)):
            res = solve_ground_shooting(spec)
            assert res.residual <= 1e-5

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            solve_ground_shooting(spec_spin0(0.0), tol=-1.0)

    def test_bracket_failure_names_bracket(self, monkeypatch):
        import relbosons.eigensolver as es

        # plant a seed estimate between levels so [est - 0.5, est + 0.5]
        # straddles no eigenvalue of -u'' + q^2 u (levels 3, 7, 11, ...)
        monkeypatch.setattr(es, "tridiag_ground",
                            lambda prob, k: np.array([29.0]))
        with pytest.raises(BracketError, match="28.5"):
            solve_ground_shooting(spec_spin0(0.0))


class TestFdMatrix:
    def test_longitudinal_massless(self):
        res = solve_ground_fd(spec_spin1(INFINITY))
        assert res.gamma == pytest.approx(2.1180340, abs=1e-5)

    def test_scalar_l1_oscillator_level(self):
        res = solve_ground_fd(spec_spin0(0.0, l=1))
        assert res.gamma == pytest.approx(2.5, abs=1e-5)

    def test_intermediate_d_cross_method(self):
        fd = solve_ground_fd(spec_spin0(1.0))
        sh = solve_ground_shooting(spec_spin0(1.0))
        assert 1.5 < fd.gamma < GOLDEN_GAMMA
        assert abs(fd.gamma - sh.gamma) <= 1e-6

    def test_matrix_residual_small(self):
        res = solve_ground_fd(spec_spin1(2.0))
        assert res.residual <= 1e-7

    def test_richardson_metadata(self):
        res = solve_ground_fd(spec_spin0(0.0))
        assert set(res.meta) >= {"lambda_h", "lambda_h_half", "richardson"}
        # Richardson beats both raw resolutions against the exact level
        assert abs(res.meta["richardson"] - 3.0) < abs(res.meta["lambda_h"] - 3.0)


class TestGammaCurve:
    def test_scalar_endpoints(self, sweep_curves):
        pts = {p.d: p for p in sweep_curves[0].points}
        assert pts[0.0].gamma == pytest.approx(1.5, abs=1e-6)
        assert pts[INFINITY].gamma == pytest.approx(GOLDEN_GAMMA, abs=1e-6)

    def test_longitudinal_endpoints(self, sweep_curves):
        pts = {p.d: p for p in sweep_curves[1].points}
        assert pts[0.0].gamma == pytest.approx(2.5, abs=1e-6)
        assert pts[INFINITY].gamma == pytest.approx(GOLDEN_GAMMA, abs=1e-6)

    def test_interval_bounds(self, sweep_curves):
        for p in sweep_curves[0].points:
            assert 1.5 - 1e-9 <= p.gamma <= GOLDEN_GAMMA + 1e-9
        for p in sweep_curves[1].points:
            assert GOLDEN_GAMMA - 1e-9 <= p.gamma <= 2.5 + 1e-9

    def test_two_method_agreement(self, sweep_curves):
        for curve in sweep_curves.values():
            for p in curve.points:
                assert p.ok
                assert abs(p.gamma_shooting - p.gamma_fd) <= 1e-6

    def test_failures_recorded_not_raised(self):
        # a grid too coarse for the contract still yields a curve object
        curve = gamma_curve(spec_spin0(0.0), [0.0, -1.0] if False else [0.0],
                            grid=RadialGrid(n=400))
        assert len(curve.points) == 1

    def test_rejects_negative_d(self):
        with pytest.raises(ValueError):
            gamma_curve(spec_spin0(0.0), [-0.5])


class TestAnalyticLimits:
    def test_all_four_residuals_within_tolerance(self):
        checks = verify_analytic_limits(n=8000)
        assert len(checks) == 4
        for chk in checks:
            assert chk.passed, f"{chk.label}: {chk.residual} > {chk.tol}"

    def test_residuals_decrease_at_order_h2(self):
        coarse = {c.label: c.residual for c in verify_analytic_limits(n=4000)}
        fine = {c.label: c.residual for c in verify_analytic_limits(n=8000)}
        for label in coarse:
            assert coarse[label] / fine[label] >= 3.0

    def test_gamma_h2_convergence(self):
        # eigenvalue error falls ~4x per refinement for the closed forms
        for case in analytic_cases():
            errs = []
            for n in (2000, 4000):
                res = solve_ground_fd(case.spec, RadialGrid(n=n))
                errs.append(abs(res.meta["lambda_h"] / 2.0 - case.gamma))
            assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.35)


class TestInvariants:
    def test_centrifugal_monotonicity(self):
        for d in (0.0, 1.0):
            gammas = [solve_ground_fd(spec_spin0(d, l=l)).gamma for l in (0, 1, 2)]
            assert gammas[0] < gammas[1] < gammas[2]
        g0 = solve_ground_fd(spec_spin1(0.5, j=0)).gamma
        g1 = solve_ground_fd(spec_spin1(0.5, j=1)).gamma
        assert g0 < g1

    def test_scaling_balance_at_limit_cases(self):
        # <q^2> = gamma holds exactly where the non-oscillator part of W
        # is homogeneous of degree -2: the four d in {0, inf} cases
        for case in analytic_cases():
            res = solve_ground_shooting(case.spec)
            assert expectation_q2(res) == pytest.approx(res.gamma, abs=1e-5)
        anchors = {"spin0 d=0": 1.5, "spin0 d=inf": (2.0 + math.sqrt(5.0)) / 2.0}
        for case in analytic_cases():
            if case.label in anchors:
                res = solve_ground_shooting(case.spec)
                assert expectation_q2(res) == pytest.approx(anchors[case.label], abs=1e-5)

    def test_scaling_balance_breaks_at_finite_d(self):
        # at finite d the virial term (d^2/4)(3+x)/(1+x)^3 (scalar) shifts
        # <q^2> away from gamma; the equality is a limit-case identity
        res = solve_ground_shooting(spec_spin0(1.0))
        assert abs(expectation_q2(res) - res.gamma) > 0.05

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            RadialGrid(q_min=0.0)
        with pytest.raises(ValueError):
            RadialGrid(n=50)
        with pytest.raises(ValueError):
            RadialGrid(q_min=2.0, q_max=1.0)

    def test_rejects_grid_outside_decay_region(self):
        # W(q_max) must clear the level estimate by 20
        with pytest.raises(ValueError, match="q_max"):
            solve_ground_shooting(spec_spin0(0.0), RadialGrid(q_max=4.0, n=2000))
