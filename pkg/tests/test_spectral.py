import math

import numpy as np
import pytest

from coupled_nls.errors import DegeneracyError, DomainError, ParameterError, RangeError
from coupled_nls.radial import make_grid
from coupled_nls.spectral import (
    bifurcation_tangent,
    curves,
    ell,
    rayleigh_quotient,
    tau,
    tau_value,
)


def cosine(grid, a, b):
    return grid.integrate(a * b) / math.sqrt(grid.integrate(a * a) * grid.integrate(b * b))


class TestTau:
    def test_unit_shift(self, gs):
        r = tau(1.0, gs=gs)
        assert abs(r.tau - 1.0) <= 1e-3
        assert cosine(gs.grid, r.phi.values, gs.values) >= 1 - 1e-6

    def test_eigen_result_invariants(self, gs):
        r = tau(2.5, gs=gs)
        assert np.all(r.phi.values > 0)
        assert math.isclose(gs.grid.integrate(gs.values**2 * r.phi.values**2), 1.0, rel_tol=1e-12)
        assert math.isclose(rayleigh_quotient(r.phi, 2.5, gs.values), r.tau, rel_tol=1e-8)
        assert r.residual <= 1e-7

    def test_increasing(self):
        shifts = [0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 10.0]
        vals = [tau(s).tau for s in shifts]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_linear_growth(self):
        vals = {s: tau(s).tau for s in (10.0, 100.0, 1000.0)}
        assert vals[10.0] < vals[100.0] < vals[1000.0]
        ratios = [vals[s] / s for s in vals]
        assert min(ratios) > 0.05

    def test_negative_shift(self):
        with pytest.raises(ParameterError):
            tau(-1.0)

    def test_small_shift_needs_large_domain(self):
        with pytest.raises(ParameterError):
            tau(1e-3, grid=make_grid(20.0, 1000))


class TestTau0:
    def test_in_unit_interval(self, tau0_result):
        assert 0 < tau0_result.value < 1
        assert tau0_result.error / tau0_result.value < 0.02

    def test_below_tau(self, tau0_result):
        for s in (1e-3, 0.1, 1.0):
            assert tau0_result.value < tau(s).tau

    def test_continuity_at_zero(self, tau0_result):
        t = tau(1e-3).tau
        assert abs(t - tau0_result.value) / tau0_result.value < 0.05

    def test_value(self, tau0_result):
        assert abs(tau0_result.value - 0.55) < 5e-3


class TestCurves:
    def test_invariants(self, curve21):
        c = curve21
        assert np.all(np.diff(c.beta1) < 0)
        assert np.all(np.diff(c.beta2) > 0)
        assert np.all(c.beta1 > c.mu1 * c.tau0)
        assert np.all(c.beta2 > c.mu2 * c.tau0)

    def test_crossing_is_common_value(self, curve21):
        c = curve21
        b1 = c.mu1 * tau_value(1 / c.lam_star, make_grid(20.0, 2000))
        b2 = c.mu2 * tau_value(c.lam_star, make_grid(20.0, 2000))
        assert abs(b1 - b2) <= 1e-6 * b2
        assert abs(c.beta_star - b2) <= 1e-4 * b2

    def test_symmetric_crossing(self, curve11):
        assert abs(curve11.lam_star - 1.0) <= 1e-6
        assert abs(curve11.beta_star - 1.0) <= 1e-3

    def test_crossing_right_of_one(self, curve21):
        assert curve21.lam_star > 1.0

    def test_small_lambda_limit(self, curve11):
        c = curve11
        assert abs(c.beta2[0] - c.mu2 * c.tau0) / (c.mu2 * c.tau0) < 0.05

    def test_swap_symmetry(self, tau0_result):
        lam = np.logspace(-1, 1, 7)
        a = curves(2.0, 1.0, lam_grid=lam, tau0_result=tau0_result)
        b = curves(1.0, 2.0, lam_grid=lam, tau0_result=tau0_result)
        # lam grid symmetric under lam -> 1/lam
        assert np.allclose(a.beta1, b.beta2[::-1], rtol=1e-12)
        assert np.allclose(a.beta2, b.beta1[::-1], rtol=1e-12)
        assert math.isclose(a.lam_star, 1 / b.lam_star, rel_tol=1e-9)

    def test_bad_inputs(self, tau0_result):
        with pytest.raises(ParameterError):
            curves(-1.0, 1.0, tau0_result=tau0_result)
        with pytest.raises(ParameterError):
            curves(1.0, 1.0, lam_grid=[2.0, 1.0], tau0_result=tau0_result)
        with pytest.raises(RangeError):
            curves(4.0, 1.0, lam_grid=[0.5, 1.0], tau0_result=tau0_result)


class TestEll:
    def test_anchor(self, curve11):
        assert abs(ell(2, 1.0, curve11) - 1.0) < 1e-6
        assert abs(ell(1, 1.0, curve11) - 1.0) < 1e-6

    def test_inverse_of_curve(self, curve11):
        lam = ell(2, 2.0, curve11)
        # ell solves on its own grid; allow the difference between grids
        assert abs(tau(lam).tau - 2.0) < 1e-6

    def test_values(self, curve11):
        assert abs(ell(2, 2.0, curve11) - 7.28814) < 1e-4
        assert abs(ell(1, 2.0, curve11) - 1 / 7.28814) < 1e-5

    def test_no_bifurcation(self, curve11):
        with pytest.raises(DomainError):
            ell(2, 0.99 * curve11.tau0, curve11)

    def test_bad_family(self, curve11):
        with pytest.raises(ParameterError):
            ell(3, 2.0, curve11)


class TestTangent:
    def test_family1_at_unit_lambda_is_ground_state(self, gs):
        ku, kv = bifurcation_tangent(1, 1.0, 1.0, gs, 1.0, 1.0, gs.grid)
        assert not np.any(ku.values)
        assert cosine(gs.grid, kv.values, gs.values) >= 1 - 1e-6

    def test_family2_positive(self, curve11):
        from coupled_nls.groundstate import ground_state_on

        lam = ell(2, 2.0, curve11)
        grid = make_grid(30.0, 6000)
        ku, kv = bifurcation_tangent(2, lam, 2.0, ground_state_on(grid), 1.0, 1.0, grid)
        assert np.all(ku.values > 0)
        assert not np.any(kv.values)

    def test_off_curve(self, gs, curve11):
        lam = ell(2, 2.0, curve11) * 1.1
        grid = make_grid(30.0, 6000)
        from coupled_nls.groundstate import ground_state_on

        with pytest.raises(DegeneracyError):
            bifurcation_tangent(2, lam, 2.0, ground_state_on(grid), 1.0, 1.0, grid)
