import pytest

from coupled_nls.continuation import StepOptions
from coupled_nls.errors import ParameterError, RangeError
from coupled_nls.regions import (
    FOUND,
    INCONCLUSIVE,
    NONE_FOUND,
    default_frequency_grid,
    default_ratio_grid,
    estimate_eta,
    frequency_cell,
    map_frequency_plane,
    map_mass_plane,
    meets_invariants,
)


def test_default_grids():
    r = default_ratio_grid()
    f = default_frequency_grid()
    assert len(r) == 25 and r[0] == pytest.approx(1e-3) and r[-1] == pytest.approx(1e3)
    assert len(f) == 40 and f[0] == pytest.approx(1e-4) and f[-1] == pytest.approx(1e4)


def test_frequency_cell_found():
    cell = frequency_cell(0, 1.0, 1.0, 0.1, 1.0, k=3, seed=0)
    assert cell.verdict == FOUND
    assert meets_invariants(cell.state)
    s = cell.summary()
    assert s["lambda"] == 1.0 and s["verdict"] == FOUND
    assert s["evidence"]["probes"] == 3


def test_frequency_cell_no_solution():
    cell = frequency_cell(0, 1.0, 3.0, 3.0, 1e-3, k=4, seed=0)
    assert cell.verdict == NONE_FOUND
    assert len(cell.evidence["records"]) == 4
    assert cell.state is None


def test_frequency_plane_rejects_bad_grid():
    with pytest.raises(ParameterError):
        map_frequency_plane(1.0, 1.0, 0.1, lam_grid=[1.0, -1.0], k=1)


def test_mass_plane(curve11):
    cells = map_mass_plane(1.0, 1.0, 2.0, [1.0, 4.0, 1e7], curve=curve11, k=2,
                           step_opts=StepOptions())
    by_ratio = {c.value: c for c in cells}
    for q in (1.0, 4.0):
        c = by_ratio[q]
        assert c.verdict == FOUND
        assert abs(c.state.rho - q) <= 1e-8 * q
        assert c.evidence["lambda1"] > 0 and c.evidence["lambda2"] > 0
    far = by_ratio[1e7]
    assert far.verdict in (NONE_FOUND, INCONCLUSIVE)
    assert far.state is None
    assert far.evidence["probes"] == 2
    lo, hi = far.evidence["achieved_rho"]
    assert hi < 1e7


def test_eta_arguments():
    with pytest.raises(ParameterError):
        estimate_eta(3, 3.0)
    with pytest.raises(ParameterError):
        estimate_eta(2, 0.5, mu1=1.0, mu2=1.0)


def test_eta_needs_transition():
    # beta = mu1 = mu2 admits positive states only at lam = 1, off this grid
    with pytest.raises(RangeError):
        estimate_eta(2, 1.0, mu1=1.0, mu2=1.0, lam_grid=[0.5, 2.0], k=2, bisections=0)
