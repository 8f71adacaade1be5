import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coupled_nls import output
from coupled_nls.config import RunConfig, parse_config
from coupled_nls.continuation import normalize, round_trip_error
from coupled_nls.coupled import explicit_solution_lambda1, joint_distance, swap_transform
from coupled_nls.groundstate import scaled_ground_state
from coupled_nls.radial import (
    BandedOperator,
    RadialField,
    l2_norm,
    make_grid,
    solve_banded_values,
    weighted_inner,
)
from coupled_nls.regions import frequency_cell

SETTINGS = settings(max_examples=30, deadline=None,
                    suppress_health_check=[HealthCheck.function_scoped_fixture])

r_maxes = st.floats(0.5, 200.0, allow_nan=False)
sizes = st.integers(16, 600)
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def field_values(n):
    return arrays(np.float64, n, elements=st.floats(-10, 10, allow_nan=False))


@SETTINGS
@given(r_maxes, sizes)
def test_grid_invariants(r_max, n):
    g = make_grid(r_max, n)
    assert g.nodes.shape == g.weights.shape == (n,)
    assert np.all(np.diff(g.nodes) > 0)
    assert 0 < g.nodes[0] < g.nodes[-1] < g.r_max
    assert math.isclose(g.integrate(np.ones(n)), 4 * math.pi * r_max**3 / 3, rel_tol=1e-12)


@SETTINGS
@given(st.integers(16, 200).flatmap(lambda n: st.tuples(*(field_values(n) for _ in range(3)))),
       finite, finite)
def test_inner_product_symmetric_bilinear(fields, a, b):
    n = len(fields[0])
    g = make_grid(10.0, n)
    f, h, k = (RadialField(g, x) for x in fields)
    assert weighted_inner(f, h) == weighted_inner(h, f)
    combo = RadialField(g, a * f.values + b * h.values)
    lhs = weighted_inner(combo, k)
    rhs = a * weighted_inner(f, k) + b * weighted_inner(h, k)
    scale = (abs(a) * l2_norm(f) + abs(b) * l2_norm(h)) * l2_norm(k) + 1e-300
    assert abs(lhs - rhs) <= 1e-10 * scale


@SETTINGS
@given(st.integers(16, 120).flatmap(lambda n: field_values(n)))
def test_operator_conjugate_symmetric(c):
    op = BandedOperator(make_grid(15.0, len(c)), c)
    a = op.symmetrized_dense()
    assert np.allclose(a, a.T, rtol=1e-12, atol=1e-12 * np.abs(a).max())


@SETTINGS
@given(st.integers(16, 400).flatmap(
    lambda n: st.tuples(arrays(np.float64, n, elements=st.floats(0.01, 50)), field_values(n))))
def test_banded_solve_round_trip(data):
    c, x = data
    op = BandedOperator(make_grid(20.0, len(c)), c)
    y = solve_banded_values(op, op.apply_values(x))
    assert np.allclose(y, x, rtol=1e-8, atol=1e-8 * (np.abs(x).max() + 1))


@SETTINGS
@given(st.floats(allow_nan=False) | st.sampled_from([math.nan, math.inf, -math.inf]))
def test_float_text_round_trip(x):
    text = output.fmt(x)
    back = float(text.replace("Infinity", "inf"))
    assert back == x or (math.isnan(x) and math.isnan(back))
    assert output.read_csv(output.emit_csv(["x"], [(x,)]))[1][0][0] == back or math.isnan(x)


@SETTINGS
@given(st.lists(finite, min_size=1, max_size=20))
def test_json_float_round_trip(xs):
    back = json.loads(output.emit_json({"xs": xs}))["xs"]
    assert back == xs


@SETTINGS
@given(
    seed=st.integers(0, 2**31),
    probes=st.integers(1, 500),
    tol=st.floats(1e-14, 1e-3),
    r_max=st.floats(15.0, 100.0),
    formats=st.sampled_from(["csv", "json", "csv,svg", "csv,json,svg"]),
)
def test_config_text_round_trip(seed, probes, tol, r_max, formats):
    cfg = RunConfig(seed=seed, probes=probes, newton_tol=tol, r_max=r_max, formats=formats)
    back = parse_config(cfg.text())
    assert back == cfg and back.sha256() == cfg.sha256()


@SETTINGS
@given(st.floats(0.25, 4.0), st.floats(0.2, 5.0))
def test_scaled_ground_state_mass(gs, lam, mu):
    # on the grid whose nodes are the scaled ones the rescaling is exact
    grid = gs.grid.scaled(1 / math.sqrt(lam))
    f = scaled_ground_state(gs, lam, mu, grid)
    expected = gs.mass**2 / (math.sqrt(lam) * mu)
    assert math.isclose(l2_norm(f) ** 2, expected, rel_tol=1e-12)


@pytest.fixture(scope="module")
def symmetric_state(base_grid):
    return explicit_solution_lambda1(1.0, 1.0, 2.0, grid=base_grid)


@SETTINGS
@given(st.floats(1.0, 4.0))
def test_normalize_masses(symmetric_state, a):
    sol = normalize(symmetric_state, a, a)
    assert math.isclose(sol.a, a, rel_tol=1e-9) and math.isclose(sol.b, a, rel_tol=1e-9)
    assert math.isclose(sol.lam1, sol.lam2, rel_tol=1e-12)
    assert sol.lam1 > 0
    assert sol.diagnostics["residual_inf"] <= 1e-7
    assert round_trip_error(sol) <= 1e-12


@SETTINGS
@given(st.floats(1.0, 2.0), st.floats(0.5, 2.0), st.floats(2.5, 4.0))
def test_swap_involution(base_grid, mu1, mu2, beta):
    s = explicit_solution_lambda1(mu1, mu2, beta, grid=base_grid)
    image = swap_transform(s)
    assert image.lam == 1.0 and image.mu1 == s.mu2
    back = swap_transform(image)
    assert back.grid == s.grid and joint_distance(back, s) == 0.0


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10**6))
def test_region_verdict_deterministic(seed):
    a = frequency_cell(0, 1.0, 1.0, 0.1, 2.0, k=2, seed=seed).summary()
    b = frequency_cell(0, 1.0, 1.0, 0.1, 2.0, k=2, seed=seed).summary()
    assert output.emit_json(a) == output.emit_json(b)
