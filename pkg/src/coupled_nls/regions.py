"""Evidence maps over mass ratios and frequency ratios.

A cell is "solution-found" only with a converged positive state attached.
"no-solution-evidence" means every seeded probe failed to produce one; it is
evidence, not proof.  Anything in between is "solver-inconclusive".
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import (
    build_branch,
    covered,
    default_seeds,
    find_ratio,
    grid_for_lambda,
    normalize,
    ratio_profile,
    solve_with_ratio,
)
from .coupled import (
    NewtonOptions,
    PROBE_H,
    multistart_probe,
    probe_start,
)
from .errors import CoupledNLSError, ParameterError, RangeError
from .groundstate import ground_state_on
from .spectral import curves

FOUND = "solution-found"
NONE_FOUND = "no-solution-evidence"
INCONCLUSIVE = "solver-inconclusive"
INVARIANT_TOL = 1e-6
ON_BRANCH_RTOL = 1e-2


@dataclass(frozen=True, eq=False)
class RegionCell:
    index: int
    mu1: float
    mu2: float
    beta: float
    coordinate: str  # "ratio" or "lambda"
    value: float
    verdict: str
    evidence: dict = field(default_factory=dict)
    state: object = None

    def summary(self):
        return {
            "index": self.index,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "beta": self.beta,
            self.coordinate: self.value,
            "verdict": self.verdict,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class EtaEstimate:
    which: int
    beta: float
    value: float
    bracket: tuple
    cells: tuple


def default_ratio_grid(n=25, lo=1e-3, hi=1e3):
    return np.logspace(math.log10(lo), math.log10(hi), n)


def default_frequency_grid(n=40, lo=1e-4, hi=1e4):
    return np.logspace(math.log10(lo), math.log10(hi), n)


def meets_invariants(state, tol=INVARIANT_TOL):
    d = state.diagnostics
    return (
        state.positive
        and d["pohozaev_rel"] <= tol
        and d["energy_u_rel"] <= tol
        and d["energy_v_rel"] <= tol
    )


def _state_summary(state):
    d = state.diagnostics
    keys = ("mass_u", "mass_v", "rho", "residual_inf", "pohozaev_rel")
    return {"lambda": state.lam, **{k: d[k] for k in keys}}


def _positive_grid(values, name):
    vals = [float(x) for x in values]
    if any(not x > 0 or not math.isfinite(x) for x in vals):
        raise ParameterError(f"{name} grid must be positive and finite")
    return vals


# -- mass plane --------------------------------------------------------------


def _branch_rhos_at(branches, lam):
    """rho values of every branch segment that spans ``lam``."""
    out = []
    for br in branches:
        prof = ratio_profile(br)
        for (l0, r0), (l1, r1) in zip(prof, prof[1:]):
            if min(l0, l1) <= lam <= max(l0, l1) and l0 != l1:
                th = (lam - l0) / (l1 - l0)
                out.append(math.exp(math.log(r0) + th * (math.log(r1) - math.log(r0))))
    return out


def _mass_probes(mu1, mu2, beta, branches, window, k, seed, probe_h=PROBE_H, decay=15.0):
    """k single-start probes at log-uniform lam in ``window``, shared by all cells."""
    lo, hi = window
    records = []
    opts = NewtonOptions(max_iter=60)
    for i in range(k):
        rng = np.random.default_rng([int(seed), i, 1])
        lam = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        grid = grid_for_lambda(lam, h=probe_h, decay=decay)
        gs = ground_state_on(grid)
        rec, st = probe_start(grid, lam, beta, mu1, mu2, gs, [int(seed), i] if i else None, opts)
        rec["start"] = i
        if st is not None and st.positive:
            near = _branch_rhos_at(branches, lam)
            rec["rho"] = st.rho
            rec["on_branch"] = any(abs(st.rho / r - 1) < ON_BRANCH_RTOL for r in near)
        records.append(rec)
    return records


def map_mass_plane(mu1, mu2, beta, ratio_grid, curve=None, window=(0.05, 20.0), k=50,
                   seed=0, grid=None, step_opts=None, h=0.01, decay=15.0, probe_h=PROBE_H):
    """Normalize-pipeline verdict for each a/b in ``ratio_grid``.

    Branches are traced once; each ratio is looked up on them.  Ratios no
    branch reaches are checked against k shared multistart probes: if some
    probe finds a positive state off every traced branch, the cell is
    inconclusive, otherwise it records no-solution evidence.
    """
    ratios = _positive_grid(ratio_grid, "ratio")
    if not ratios:
        return []
    curve = curves(mu1, mu2) if curve is None else curve
    branches, failures = [], []
    for origin in default_seeds(beta, curve):
        if covered(origin, branches):
            continue
        try:
            branches.append(
                build_branch(beta, curve, origin, window, grid, step_opts, h=h, decay=decay)
            )
        except CoupledNLSError as exc:
            failures.append(f"{origin}: {exc}")
    probes = None
    cells = []
    for idx, q in enumerate(ratios):
        found, errors = None, []
        for br in branches:
            try:
                st = find_ratio(br, q)
                st = solve_with_ratio(st, q, grid_for_lambda(st.lam, h=h, decay=decay))
                # any representative of the ratio will do; alpha = 1 keeps the
                # residual at the solver's level instead of amplifying it
                d = st.diagnostics
                sol = normalize(st, d["mass_u"], d["mass_v"])
            except RangeError:
                continue
            except CoupledNLSError as exc:
                errors.append(str(exc))
                continue
            if meets_invariants(st):
                found = (st, sol, br)
                break
            errors.append("positive state fails the invariant checks")
        base = dict(index=idx, mu1=mu1, mu2=mu2, beta=beta, coordinate="ratio", value=q)
        if found:
            st, sol, br = found
            # frequencies of the representative with |v| = 1
            a4 = st.diagnostics["mass_v"] ** 4
            ev = {
                **_state_summary(st),
                "lambda1": st.lam * a4,
                "lambda2": a4,
                "normalized_residual": sol.diagnostics["residual_inf"],
                "branch": br.origin,
            }
            cells.append(RegionCell(verdict=FOUND, evidence=ev, state=st, **base))
            continue
        if errors or not branches and failures:
            ev = {"errors": errors + failures}
            cells.append(RegionCell(verdict=INCONCLUSIVE, evidence=ev, **base))
            continue
        if probes is None:
            probes = _mass_probes(mu1, mu2, beta, branches, window, k, seed, probe_h, decay)
        off = [r for r in probes if r.get("on_branch") is False]
        ev = {
            "branches": [b.origin for b in branches],
            "achieved_rho": _achieved(branches),
            "probes": len(probes),
            "records": probes,
        }
        verdict = INCONCLUSIVE if off else NONE_FOUND
        cells.append(RegionCell(verdict=verdict, evidence=ev, **base))
    return cells


def _achieved(branches):
    rhos = [r for br in branches for _, r in ratio_profile(br)]
    return [min(rhos), max(rhos)] if rhos else None


# -- frequency plane ---------------------------------------------------------


def frequency_cell(idx, mu1, mu2, beta, lam, k, seed, grid_opts=None):
    base = dict(index=idx, mu1=mu1, mu2=mu2, beta=beta, coordinate="lambda", value=lam)
    try:
        found = multistart_probe(lam, beta, k, seed, mu1, mu2, **(grid_opts or {}))
    except CoupledNLSError as exc:
        return RegionCell(verdict=INCONCLUSIVE, evidence={"errors": [str(exc)]}, **base)
    good = [s for s in found if meets_invariants(s)]
    counts = {}
    for r in found.records:
        counts[r["outcome"]] = counts.get(r["outcome"], 0) + 1
    ev = {"probes": len(found.records), "outcomes": dict(sorted(counts.items()))}
    if good:
        ev.update(_state_summary(good[0]), distinct=len(good))
        return RegionCell(verdict=FOUND, evidence=ev, state=good[0], **base)
    if found:
        ev["errors"] = ["positive states found but they fail the invariant checks"]
        return RegionCell(verdict=INCONCLUSIVE, evidence=ev, **base)
    ev["records"] = found.records
    return RegionCell(verdict=NONE_FOUND, evidence=ev, **base)


def map_frequency_plane(mu1, mu2, beta, lam_grid=None, k=50, seed=0, grid_opts=None):
    """Multistart verdict at each lam; grids follow ``grid_for_lambda``.

    ``grid_opts`` passes probe_h, h and decay on to ``multistart_probe``.
    """
    lams = _positive_grid(default_frequency_grid() if lam_grid is None else lam_grid, "lambda")
    return [frequency_cell(i, mu1, mu2, beta, lam, k, seed, grid_opts) for i, lam in enumerate(lams)]


def estimate_eta(which, beta, mu1=1.0, mu2=1.0, lam_grid=None, k=50, seed=0, bisections=4,
                 grid_opts=None):
    """Empirical threshold in lam between found and no-solution cells.

    which = 2 looks for nonexistence below the threshold (small lam), which = 1
    above it.  The grid transition is refined by bisection in log lam.
    """
    if which not in (1, 2):
        raise ParameterError(f"which must be 1 or 2, got {which}")
    mu = mu1 if which == 1 else mu2
    if beta < mu:
        raise ParameterError(f"need beta >= mu{which} = {mu}, got {beta}")
    cells = map_frequency_plane(mu1, mu2, beta, lam_grid, k, seed, grid_opts)
    if len(cells) < 2:
        raise RangeError("a single lambda gives no transition", achieved=[c.verdict for c in cells])
    ordered = sorted(cells, key=lambda c: c.value)
    if which == 1:
        ordered = ordered[::-1]
    # walk from the nonexistence side to the first solution-found cell
    lo = hi = None
    for a, b in zip(ordered, ordered[1:]):
        if a.verdict == NONE_FOUND and b.verdict == FOUND:
            lo, hi = a.value, b.value
            break
    if lo is None:
        raise RangeError(
            "no transition from no-solution evidence to solution-found in the window",
            achieved=[(c.value, c.verdict) for c in cells],
        )
    extra = []
    for j in range(bisections):
        mid = math.sqrt(lo * hi)
        cell = frequency_cell(len(cells) + j, mu1, mu2, beta, mid, k, seed, grid_opts)
        extra.append(cell)
        if cell.verdict == FOUND:
            hi = mid
        elif cell.verdict == NONE_FOUND:
            lo = mid
        else:
            break
    bracket = tuple(sorted((lo, hi)))
    return EtaEstimate(which, beta, math.sqrt(lo * hi), bracket, tuple(cells) + tuple(extra))
