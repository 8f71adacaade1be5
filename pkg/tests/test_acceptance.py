"""End-to-end acceptance checks, one test per criterion.

Each test tags itself with a criterion label; conftest prints one PASS/FAIL
line per label in the terminal summary.  Run alone with

    pytest tests/test_acceptance.py -v
"""

import filecmp
import math
import os
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from coupled_nls import cli
from coupled_nls.continuation import (
    build_branch,
    endpoint_extrapolation,
    find_ratio,
    normalized_solution,
    round_trip_error,
)
from coupled_nls.coupled import (
    explicit_solution_lambda1,
    joint_distance,
    multistart_probe,
    newton_solve,
)
from coupled_nls.groundstate import _solve_cached, ground_state_on
from coupled_nls.radial import grad_norm2, l2_norm, l4_norm4, make_grid, resample
from coupled_nls.spectral import curves, ell, tau, tau0


@pytest.fixture
def criterion(record_property):
    def tag(label):
        record_property("criterion", label)

    return tag


def _oracle_central_value():
    """U(0) by bisection on the far-field behaviour of an RK45 shot.

    Deliberately independent of the package: different integrator, start
    expansion and event logic.
    """

    def fate(a):
        r0 = 1e-4
        y0 = [a + a * (1 - a * a) * r0**2 / 6, a * (1 - a * a) * r0 / 3]

        def rhs(r, y):
            return [y[1], -2 * y[1] / r + y[0] - y[0] ** 3]

        def crossed(r, y):
            return y[0]

        def rising(r, y):
            return y[1]

        crossed.terminal = rising.terminal = True
        sol = solve_ivp(rhs, (r0, 30.0), y0, method="RK45", rtol=1e-12, atol=1e-14,
                        events=(crossed, rising))
        if sol.t_events[0].size:
            return 1.0  # overshoot: goes negative
        return -1.0  # undershoot: turns back up, or decays

    lo, hi = 2.0, 6.0
    assert fate(lo) < 0 < fate(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if fate(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_criterion_1_ground_state(criterion):
    criterion("criterion 1: ground state residual, S identity, U(0) oracle, <= 5 s")
    _solve_cached.cache_clear()
    t0 = time.perf_counter()
    gs = ground_state_on(make_grid(20.0, 2000))
    elapsed = time.perf_counter() - t0
    assert gs.residual <= 1e-8
    l4 = l4_norm4(gs.field)
    rhs = grad_norm2(gs.field) + l2_norm(gs.field) ** 2
    assert abs(l4 - rhs) / rhs <= 1e-3
    oracle = _oracle_central_value()
    assert abs(gs.central_value - oracle) / oracle <= 1e-5
    assert elapsed <= 5.0, f"ground state took {elapsed:.2f} s"


def test_criterion_2_spectral(criterion, gs):
    criterion("criterion 2: tau(1) = 1, eigenfunction ~ U, tau increasing, tau0 in (0,1), <= 60 s")
    t0 = time.perf_counter()
    one = tau(1.0, gs=gs)
    assert abs(one.tau - 1.0) <= 1e-3
    g = gs.grid
    phi, U = one.phi.values, gs.values
    cos = g.integrate(phi * U) / math.sqrt(g.integrate(phi**2) * g.integrate(U**2))
    assert cos >= 1 - 1e-6
    shifts = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0]
    vals = [tau(s).tau for s in shifts]
    assert all(b > a for a, b in zip(vals, vals[1:])), vals
    t = tau0()
    assert 0 < t.value < 1
    assert t.error / t.value < 0.02
    elapsed = time.perf_counter() - t0
    assert elapsed <= 60.0, f"spectral checks took {elapsed:.1f} s"


def test_criterion_3_curves(criterion, curve11, curve21):
    criterion("criterion 3: beta1 decreasing, beta2 increasing, unique crossing, lam* = 1")
    for c in (curve11, curve21):
        assert c.lam.size == 200
        assert np.all(np.diff(c.beta1) < 0)
        assert np.all(np.diff(c.beta2) > 0)
        d = np.sign(c.beta1 - c.beta2)
        assert np.count_nonzero(d[:-1] != d[1:]) == 1
    assert abs(curve11.lam_star - 1.0) <= 1e-6


def test_criterion_4_explicit_solution(criterion, base_grid):
    criterion("criterion 4: explicit (2,1,3) state, rho = sqrt 2, Pohozaev, reconvergence")
    st = explicit_solution_lambda1(2.0, 1.0, 3.0, grid=base_grid)
    d = st.diagnostics
    assert d["residual_inf"] <= 1e-8
    assert abs(st.rho - math.sqrt(2.0)) <= 1e-6
    assert d["pohozaev_rel"] <= 1e-6
    rng = np.random.default_rng(1)
    noisy = st.with_fields(
        st.u.values * (1 + 0.01 * rng.standard_normal(base_grid.n)),
        st.v.values * (1 + 0.01 * rng.standard_normal(base_grid.n)),
    )
    again = newton_solve(noisy)
    assert again.diagnostics["residual_inf"] <= 1e-9
    assert joint_distance(st, again) <= 1e-6


def test_criterion_5_branch_and_asymptotics(criterion, tau0_result):
    criterion("criterion 5: beta=2 branch hits explicit state, rho ends, small-lam profile, <= 3 min")
    t0 = time.perf_counter()
    curve = curves(1.0, 1.0, tau0_result=tau0_result)
    br = build_branch(2.0, curve, 1, window=(0.05, 20.0))
    elapsed = time.perf_counter() - t0

    at_one = find_ratio(br, 1.0)
    exact = explicit_solution_lambda1(1.0, 1.0, 2.0, grid=at_one.grid)
    assert abs(at_one.lam - 1.0) < 1e-6
    assert joint_distance(exact, at_one) < 1e-4

    ends = sorted((br.points[0], br.points[-1]), key=lambda p: p.lam)
    assert ends[0].rho > 10
    assert ends[1].rho < 0.1

    small = min(br.points, key=lambda p: p.lam).state
    gs = ground_state_on(make_grid(20.0, 2000))
    k = math.sqrt(small.lam)
    rescaled = resample(small.grid, small.u.values, gs.grid.nodes / k) / k
    assert np.abs(rescaled - gs.values).max() <= 0.05 * gs.values.max()
    assert elapsed <= 180.0, f"branch pipeline took {elapsed:.1f} s"


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (1.0, 2.0), (3.0, 0.5)])
def test_criterion_6_normalization(criterion, curve11, a, b):
    criterion("criterion 6: normalized solutions for (1,1), (1,2), (3,0.5)")
    sol, _ = normalized_solution(curve11, 2.0, a, b)
    d = sol.diagnostics
    assert abs(d["mass_u"] - a) <= 1e-6 * a
    assert abs(d["mass_v"] - b) <= 1e-6 * b
    assert d["residual_inf"] <= 1e-7
    assert sol.lam1 > 0 and sol.lam2 > 0
    assert d["pohozaev_rel"] <= 1e-6
    assert round_trip_error(sol) <= 1e-6


def test_criterion_7_nonexistence_evidence(criterion):
    criterion("criterion 7: no positive states at lam=1e-3 (1,3,3); found everywhere for beta=0.1")
    none = multistart_probe(1e-3, 3.0, 50, seed=0, mu1=1.0, mu2=3.0)
    assert len(none.records) == 50
    assert len(none) == 0, [s.diagnostics for s in none]
    for lam in np.logspace(-2, 2, 9):
        found = multistart_probe(float(lam), 0.1, 4, seed=0)
        assert len(found) >= 1, f"nothing at lam = {lam}"
        assert found[0].diagnostics["pohozaev_rel"] <= 1e-6


def test_criterion_8_bifurcation_consistency(criterion, branch_b2, curve11):
    criterion("criterion 8: extrapolated branch end matches ell2(beta) to 1%")
    assert branch_b2.termination == "connected to other family"
    end = endpoint_extrapolation(branch_b2)
    assert end is not None and end["family"] == 2
    target = ell(2, 2.0, curve11)
    assert abs(end["lambda"] - target) <= 0.01 * target


DETERMINISM_RUNS = [
    ["groundstate"],
    ["tau", "--s", "0.5", "1", "4"],
    ["curves", "--mu1", "2", "--mu2", "1"],
    ["solve", "--lambda", "1", "--beta", "3", "--mu1", "2", "--seed-from", "explicit"],
    ["continue", "--beta", "3", "--mu1", "2", "--family", "explicit"],
    ["normalize", "--beta", "2", "--a", "1", "--b", "2"],
    ["regions", "--plane", "frequency", "--beta", "0.1", "--count", "3", "--lo", "0.1",
     "--hi", "10", "--probes", "3"],
]


def test_criterion_9_determinism(criterion, tmp_path):
    criterion("criterion 9: byte-identical reruns of every subcommand")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 7\ncurve_points = 40\n")
    for args in DETERMINISM_RUNS:
        dirs = []
        for rep in range(2):
            out = tmp_path / f"{args[0]}-{rep}"
            code = cli.main(["--config", str(cfg), "--seed", "7", "--out", str(out), *args])
            assert code == 0, args
            dirs.append(out)
        names = sorted(os.listdir(dirs[0]))
        assert names == sorted(os.listdir(dirs[1]))
        assert any(n.endswith(".csv") or n.endswith(".json") for n in names)
        match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
        assert not mismatch and not errors, (args, mismatch, errors)


def _run_standalone():
    import sys

    sys.exit(pytest.main([__file__, "-v"]))


if __name__ == "__main__":
    _run_standalone()
