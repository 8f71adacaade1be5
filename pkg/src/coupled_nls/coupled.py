"""Newton solver for the fixed-frequency coupled system

    -Delta u + lam u = mu1 u^3 + beta v^2 u
    -Delta v +     v = mu2 v^3 + beta u^2 v

on a radial grid, with the closed-form solution at lam = 1 and diagnostics.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassificationError,
    DomainError,
    NonConvergenceError,
    ParameterError,
    SolverError,
)
from .groundstate import ground_state_on
from .radial import (
    RadialField,
    coupled_banded,
    make_grid,
    minus_laplacian,
    resample,
    solve_coupled_banded,
    stiffness_apply,
)

SEMITRIVIAL_RATIO = 1e-6
TRIVIAL_MASS = 1e-6
INNER_FRACTION = 0.9
DEDUP_TOL = 1e-4
PROBE_H = 0.02


def residual_arrays(grid, lam, beta, mu1, mu2, u, v):
    lu = minus_laplacian(grid, u)
    lv = minus_laplacian(grid, v)
    ru = lu + lam * u - mu1 * u**3 - beta * v**2 * u
    rv = lv + v - mu2 * v**3 - beta * u**2 * v
    return ru, rv


def classify(grid, u, v):
    """One of "positive", "semitrivial", "sign-changing", "trivial"."""
    mu_ = math.sqrt(max(grid.integrate(u**2), 0.0))
    mv_ = math.sqrt(max(grid.integrate(v**2), 0.0))
    if max(mu_, mv_) < TRIVIAL_MASS:
        return "trivial"
    if mu_ < SEMITRIVIAL_RATIO * mv_ or mv_ < SEMITRIVIAL_RATIO * mu_:
        return "semitrivial"
    inner = max(1, int(INNER_FRACTION * grid.n))
    if u[:inner].min() > 0 and v[:inner].min() > 0:
        return "positive"
    return "sign-changing"


def _diagnostics(grid, lam, beta, mu1, mu2, u, v):
    i = grid.integrate
    m_u2, m_v2 = i(u**2), i(v**2)
    l4u, l4v, cross = i(u**4), i(v**4), i(u**2 * v**2)
    gu = 4.0 * math.pi * float(u @ stiffness_apply(grid, u))
    gv = 4.0 * math.pi * float(v @ stiffness_apply(grid, v))
    ru, rv = residual_arrays(grid, lam, beta, mu1, mu2, u, v)
    mass_u, mass_v = math.sqrt(max(m_u2, 0.0)), math.sqrt(max(m_v2, 0.0))
    lhs = lam * m_u2 + m_v2
    rhs = 0.25 * (mu1 * l4u + mu2 * l4v + 2.0 * beta * cross)
    den = abs(lhs) + abs(rhs)
    eu_l, eu_r = gu + lam * m_u2, mu1 * l4u + beta * cross
    ev_l, ev_r = gv + m_v2, mu2 * l4v + beta * cross
    return {
        "mass_u": mass_u,
        "mass_v": mass_v,
        "l4_u4": l4u,
        "l4_v4": l4v,
        "grad_u2": gu,
        "grad_v2": gv,
        "cross": cross,
        "rho": mass_u / mass_v if mass_v > 0 else math.inf,
        "residual_inf": float(max(np.abs(ru).max(), np.abs(rv).max())),
        "pohozaev_rel": abs(lhs - rhs) / den if den > 0 else 0.0,
        "energy_u_rel": abs(eu_l - eu_r) / (abs(eu_l) + abs(eu_r)) if eu_l or eu_r else 0.0,
        "energy_v_rel": abs(ev_l - ev_r) / (abs(ev_l) + abs(ev_r)) if ev_l or ev_r else 0.0,
    }


@dataclass(frozen=True, eq=False)
class CoupledState:
    """A candidate solution (lam, beta, u, v); diagnostics are derived on construction."""

    lam: float
    beta: float
    mu1: float
    mu2: float
    u: RadialField
    v: RadialField
    diagnostics: dict = field(init=False)
    classification: str = field(init=False)
    iterations: int = 0

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ParameterError("u and v must share one grid")
        g = self.u.grid
        d = _diagnostics(g, self.lam, self.beta, self.mu1, self.mu2, self.u.values, self.v.values)
        object.__setattr__(self, "diagnostics", d)
        object.__setattr__(self, "classification", classify(g, self.u.values, self.v.values))

    @property
    def grid(self):
        return self.u.grid

    @property
    def rho(self):
        return self.diagnostics["rho"]

    @property
    def positive(self):
        return self.classification == "positive"

    def with_fields(self, u, v, lam=None, iterations=0):
        g = self.grid
        return CoupledState(
            self.lam if lam is None else float(lam), self.beta, self.mu1, self.mu2,
            RadialField(g, u), RadialField(g, v), iterations=iterations,
        )

    def stacked(self):
        return np.concatenate([self.u.values, self.v.values])


def make_state(grid, lam, beta, mu1, mu2, u, v, iterations=0):
    return CoupledState(
        float(lam), float(beta), float(mu1), float(mu2),
        RadialField(grid, u), RadialField(grid, v), iterations=iterations,
    )


def residual(state):
    ru, rv = residual_arrays(
        state.grid, state.lam, state.beta, state.mu1, state.mu2, state.u.values, state.v.values
    )
    return RadialField(state.grid, ru), RadialField(state.grid, rv)


def pohozaev_relative(state):
    """|LHS - RHS| / (|LHS| + |RHS|) for lam|u|^2 + |v|^2 = (mu1|u|_4^4 + mu2|v|_4^4 + 2 beta|uv|^2)/4."""
    return state.diagnostics["pohozaev_rel"]


def jacobian_banded(grid, lam, beta, mu1, mu2, u, v):
    """M-scaled Jacobian of (residual_u, residual_v) in interleaved banded form."""
    return coupled_banded(
        grid,
        lam - 3.0 * mu1 * u**2 - beta * v**2,
        1.0 - 3.0 * mu2 * v**2 - beta * u**2,
        -2.0 * beta * u * v,
    )


def jacobian_apply(grid, lam, beta, mu1, mu2, u, v, du, dv):
    """Nodal J (du, dv), unscaled."""
    ju = minus_laplacian(grid, du) + (lam - 3 * mu1 * u**2 - beta * v**2) * du - 2 * beta * u * v * dv
    jv = minus_laplacian(grid, dv) + (1 - 3 * mu2 * v**2 - beta * u**2) * dv - 2 * beta * u * v * du
    return ju, jv


def interleave(a, b):
    out = np.empty(2 * a.size)
    out[0::2] = a
    out[1::2] = b
    return out


def split(x):
    return x[0::2], x[1::2]


@dataclass
class NewtonOptions:
    tol: float = 1e-9
    max_iter: int = 50
    armijo: float = 1e-4
    max_halvings: int = 30


def _merit(grid, ru, rv):
    m = grid.mass
    return math.sqrt(float(np.sum((m * ru) ** 2) + np.sum((m * rv) ** 2)))


def grid_for_window(lam_lo, lam_hi, h=0.01, decay=15.0, r_min=20.0):
    """Grid resolving U_{lam} for lam in [lam_lo, lam_hi] and v on scale 1.

    r_max follows the slowest decay exp(-sqrt(lam_lo) r), the step the
    shortest length 1/sqrt(lam_hi).
    """
    if not (0 < lam_lo <= lam_hi):
        raise ParameterError(f"need 0 < lam_lo <= lam_hi, got {lam_lo}, {lam_hi}")
    r_max = max(r_min, decay / math.sqrt(min(lam_lo, 1.0)))
    step = h / math.sqrt(max(lam_hi, 1.0))
    return make_grid(math.ceil(r_max), int(math.ceil(r_max / step)))


def grid_for_lambda(lam, h=0.01, decay=15.0):
    return grid_for_window(min(lam, 1.0), max(lam, 1.0), h=h, decay=decay)


def roundoff_floor(grid, u, v):
    """Smallest residual_inf the grid can certify for fields of this size.

    Rounding the stored values by eps is amplified by the stencil, whose
    largest coefficient is 5/(2 h^2).
    """
    amp = max(np.abs(u).max(), np.abs(v).max(), 1.0)
    return 40.0 * np.finfo(float).eps * amp * 2.5 / grid.h**2


def newton_arrays(grid, lam, beta, mu1, mu2, u, v, opts=None):
    """Damped Newton on nodal arrays.  Returns (u, v, iterations, residual_inf).

    The target is opts.tol, raised to the grid's roundoff floor when that is
    larger (very fine grids).
    """
    opts = NewtonOptions() if opts is None else opts
    u = np.array(u, dtype=float)
    v = np.array(v, dtype=float)
    opts = NewtonOptions(**{**opts.__dict__, "tol": max(opts.tol, roundoff_floor(grid, u, v))})
    ru, rv = residual_arrays(grid, lam, beta, mu1, mu2, u, v)
    res = max(np.abs(ru).max(), np.abs(rv).max())
    phi = _merit(grid, ru, rv)
    history = [res]
    it = 0
    while res > opts.tol:
        if it >= opts.max_iter or not np.isfinite(res):
            raise NonConvergenceError(
                f"Newton did not converge in {it} iterations (residual {res:.3e})",
                last_residual=res,
            )
        it += 1
        ab = jacobian_banded(grid, lam, beta, mu1, mu2, u, v)
        m = grid.mass
        d = solve_coupled_banded(ab, -interleave(m * ru, m * rv))
        du, dv = split(d)
        alpha = 1.0
        for _ in range(opts.max_halvings + 1):
            un, vn = u + alpha * du, v + alpha * dv
            run, rvn = residual_arrays(grid, lam, beta, mu1, mu2, un, vn)
            phin = _merit(grid, run, rvn)
            if np.isfinite(phin) and phin <= (1.0 - opts.armijo * alpha) * phi:
                break
            alpha *= 0.5
        u, v, ru, rv, phi = un, vn, run, rvn, phin
        new_res = max(np.abs(ru).max(), np.abs(rv).max())
        history.append(new_res)
        # roundoff floor: a full step that no longer reduces the residual
        if alpha == 1.0 and new_res > 0.5 * res and new_res < 1e3 * opts.tol and it > 2:
            res = new_res
            break
        res = new_res
    if res > opts.tol and res > 1e3 * opts.tol:
        raise NonConvergenceError(f"Newton stalled at residual {res:.3e}", last_residual=res)
    return u, v, it, res


def newton_solve(guess, lam=None, beta=None, opts=None, accept=("positive",)):
    """Newton from ``guess`` at (lam, beta) (defaults: the guess's own values).

    Raises ClassificationError when the limit is not in ``accept``; the
    converged state is attached to the exception.
    """
    lam = guess.lam if lam is None else float(lam)
    beta = guess.beta if beta is None else float(beta)
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    u, v, it, _ = newton_arrays(
        guess.grid, lam, beta, guess.mu1, guess.mu2, guess.u.values, guess.v.values, opts
    )
    state = make_state(guess.grid, lam, beta, guess.mu1, guess.mu2, u, v, iterations=it)
    if state.classification not in accept:
        raise ClassificationError(state.classification, state)
    return state


def explicit_coefficients(mu1, mu2, beta):
    if not (mu1 > 0 and mu2 > 0 and beta > 0):
        raise ParameterError("mu1, mu2, beta must be positive")
    den = beta * beta - mu1 * mu2
    lo, hi = min(mu1, mu2), max(mu1, mu2)
    if lo <= beta <= hi:
        if mu1 == mu2:
            raise DomainError(
                f"beta = mu1 = mu2 = {beta}: the lam = 1 solutions form a continuum"
            )
        raise DomainError(
            f"no positive solution at lam = 1 in the regime beta in [{lo}, {hi}]"
        )
    return math.sqrt((beta - mu2) / den), math.sqrt((beta - mu1) / den)


def explicit_solution_lambda1(mu1, mu2, beta, grid=None, gs=None):
    """(c_u U, c_v U) at lam = 1 with the ground state solved on ``grid``."""
    cu, cv = explicit_coefficients(mu1, mu2, beta)
    if gs is None:
        gs = ground_state_on(make_grid(20.0, 2000) if grid is None else grid)
    U = gs.values
    return make_state(gs.grid, 1.0, beta, mu1, mu2, cu * U, cv * U)


def semitrivial_state(family, lam, beta, mu1, mu2, grid):
    """(U_{lam,mu1}, 0) for family 1, (0, U_{1,mu2}) for family 2, exact on ``grid``."""
    from .spectral import semitrivial_profile

    gs = ground_state_on(grid)
    zero = np.zeros(grid.n)
    if family == 1:
        return make_state(grid, lam, beta, mu1, mu2, semitrivial_profile(gs, grid, lam, mu1), zero)
    if family == 2:
        return make_state(grid, lam, beta, mu1, mu2, zero, semitrivial_profile(gs, grid, 1.0, mu2))
    raise ParameterError(f"family must be 1 or 2, got {family}")


def joint_distance(a, b):
    """Relative L^2 distance between (u, v) pairs on one grid."""
    g = a.grid
    num = g.integrate((a.u.values - b.u.values) ** 2 + (a.v.values - b.v.values) ** 2)
    den = g.integrate(a.u.values**2 + a.v.values**2)
    return math.sqrt(max(num, 0.0) / den) if den > 0 else math.sqrt(max(num, 0.0))


def swap_transform(state, grid=None):
    """Image of a solution at lam under the map to the swapped system at 1/lam:

        u_bar(x) = v(x / sqrt(lam)) / sqrt(lam),  v_bar(x) = u(x / sqrt(lam)) / sqrt(lam),

    which solves the system with (mu1, mu2) exchanged.  Values are exact on the
    grid scaled by sqrt(lam).
    """
    lam = state.lam
    k = math.sqrt(lam)
    target = state.grid.scaled(k)
    ub = state.v.values / k
    vb = state.u.values / k
    out = make_state(target, 1.0 / lam, state.beta, state.mu2, state.mu1, ub, vb)
    if grid is not None and grid != target:
        out = make_state(
            grid, 1.0 / lam, state.beta, state.mu2, state.mu1,
            resample(target, ub, grid.nodes), resample(target, vb, grid.nodes),
        )
    return out


class ProbeResult(list):
    """Positive states found by a multistart probe; ``records`` logs every start."""

    def __init__(self, states=(), records=()):
        super().__init__(states)
        self.records = list(records)

    @property
    def verdict(self):
        if self:
            return "solution-found"
        return "no positive solution found (evidence, not proof)"


def random_start(grid, lam, mu1, mu2, gs, rng=None):
    """Positive initial fields shaped like the scaled ground states.

    Without ``rng`` this is the decoupled guess (U_{lam,mu1}, U_{1,mu2}).
    """
    if rng is None:
        au = av = su = sv = 1.0
    else:
        au, av = np.exp(rng.uniform(np.log(0.3), np.log(1.5), size=2))
        su, sv = rng.uniform(0.6, 1.6, size=2)
    r = grid.nodes
    U = lambda x: resample(gs.grid, gs.values, x)
    u0 = au * math.sqrt(lam / mu1) * U(math.sqrt(lam) * r / su)
    v0 = av * math.sqrt(1.0 / mu2) * U(r / sv)
    return u0, v0


def probe_start(grid, lam, beta, mu1, mu2, gs, seed, opts=None):
    """One Newton run from the random start drawn with ``default_rng(seed)``;
    ``seed=None`` starts from the decoupled guess.

    Returns (record, state); state is None unless Newton converged.
    """
    rng = None if seed is None else np.random.default_rng(seed)
    u0, v0 = random_start(grid, lam, mu1, mu2, gs, rng)
    rec = {"seed": seed if seed is None else list(np.atleast_1d(seed).tolist()), "lam": float(lam)}
    try:
        u, v, it, _ = newton_arrays(grid, lam, beta, mu1, mu2, u0, v0, opts)
    except SolverError as exc:
        rec.update(outcome="diverged", residual=getattr(exc, "last_residual", None))
        return rec, None
    st = make_state(grid, lam, beta, mu1, mu2, u, v, iterations=it)
    rec.update(outcome=st.classification, iterations=it, residual=st.diagnostics["residual_inf"])
    return rec, st


def _refine_on(state, grid, opts):
    u0, v0 = state.u.at(grid.nodes), state.v.at(grid.nodes)
    try:
        u, v, it, _ = newton_arrays(grid, state.lam, state.beta, state.mu1, state.mu2, u0, v0, opts)
    except SolverError:
        return None
    return make_state(grid, state.lam, state.beta, state.mu1, state.mu2, u, v, iterations=it)


def multistart_probe(lam, beta, k, seed, mu1=1.0, mu2=1.0, grid=None, opts=None,
                     probe_h=PROBE_H, h=0.01, decay=15.0):
    """k Newton runs from positive starts; deduplicated positive states.

    Start 0 is the decoupled guess, start i > 0 draws from
    ``numpy.random.default_rng([seed, i])``, so results do not depend on
    execution order.  Without an explicit ``grid`` the probes run on a coarse
    grid and each positive hit is re-solved on ``grid_for_lambda(lam)``.
    An empty result is evidence of nonexistence, not proof.
    """
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    fine = None
    if grid is None:
        # classification only needs a coarser step than the diagnostics do
        grid = grid_for_lambda(lam, h=probe_h, decay=decay)
        fine = grid_for_lambda(lam, h=h, decay=decay)
    gs = ground_state_on(grid) if grid.r_max >= 15 else ground_state_on(make_grid(20.0, 2000))
    opts = NewtonOptions(max_iter=60) if opts is None else opts
    found, records = [], []
    for i in range(int(k)):
        rec, st = probe_start(grid, lam, beta, mu1, mu2, gs, [int(seed), i] if i else None, opts)
        rec["start"] = i
        if st is not None and st.positive and fine is not None:
            st = _refine_on(st, fine, opts)
            if st is None:
                rec["outcome"] = "lost on refinement"
        if st is not None and st.positive:
            if not any(joint_distance(st, f) < DEDUP_TOL for f in found):
                found.append(st)
        records.append(rec)
    return ProbeResult(found, records)
