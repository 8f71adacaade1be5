"""Pseudo-arclength continuation in lam at fixed beta, mass ratios along
branches, and the rescaling to prescribed masses.

The unknown is x = (u, v, lam).  Distances use

    <x, y>_W = (int u1 u2 + v1 v2) / N^2 + lam1 lam2,

with N the joint L^2 norm of the seed fields, so that field and frequency
directions weigh alike.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .coupled import (
    explicit_solution_lambda1,
    grid_for_lambda,
    grid_for_window,
    interleave,
    jacobian_banded,
    joint_distance,
    make_state,
    newton_arrays,
    residual_arrays,
    split,
)
from .errors import (
    AccuracyError,
    ClassificationError,
    DegeneracyError,
    DomainError,
    NonConvergenceError,
    ParameterError,
    RangeError,
    SeedError,
    SolverError,
)
from .groundstate import ground_state_on
from .radial import RadialField, minus_laplacian, solve_coupled_banded
from .spectral import bifurcation_tangent, ell, semitrivial_profile

RHO_CAP = 1e9
RHO_FLOOR = 1e-9
CONNECT_RATIO = 1e-3


@dataclass
class StepOptions:
    ds0: float = 0.02
    ds_min: float = 1e-7
    ds_max: float = 0.25
    grow: float = 1.3
    shrink: float = 0.5
    easy_iterations: int = 3
    max_corrector: int = 8
    max_points: int = 2000
    tol: float = 1e-9
    rho_jump: float = 0.5  # max |change of log rho| per step
    connect_ratio: float = CONNECT_RATIO


@dataclass(frozen=True, eq=False)
class BranchPoint:
    state: object
    arclength: float
    tangent: tuple  # (tu, tv, tlam) with unit W-norm

    @property
    def lam(self):
        return self.state.lam

    @property
    def rho(self):
        return self.state.rho


@dataclass(frozen=True, eq=False)
class Branch:
    beta: float
    mu1: float
    mu2: float
    origin: str
    points: tuple
    termination: str
    norm: float = 1.0
    origin_lambda: float = math.nan
    events: tuple = ()

    def __len__(self):
        return len(self.points)

    @property
    def lambdas(self):
        return np.array([p.lam for p in self.points])

    @property
    def grid(self):
        return self.points[0].state.grid


@dataclass(frozen=True, eq=False)
class NormalizedSolution:
    lam1: float
    lam2: float
    u: RadialField
    v: RadialField
    a: float
    b: float
    alpha: float
    beta: float
    mu1: float
    mu2: float
    source: object = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.u.grid


# -- weighted geometry -------------------------------------------------------


class _Geometry:
    def __init__(self, grid, norm):
        self.grid = grid
        self.w = 4.0 * math.pi * np.asarray(grid.weights) / norm**2

    def dot(self, a, b):
        (ua, va, la), (ub, vb, lb) = a, b
        return float(self.w @ (ua * ub + va * vb)) + la * lb

    def normalize(self, t):
        s = math.sqrt(self.dot(t, t))
        return tuple(c / s for c in t)


def _state_tuple(state):
    return (np.array(state.u.values), np.array(state.v.values), state.lam)


def _combine(x, t, ds):
    return (x[0] + ds * t[0], x[1] + ds * t[1], x[2] + ds * t[2])


def _tangent(grid, beta, mu1, mu2, x, geo, prev):
    """Null direction of [J, F_lam] oriented along ``prev``."""
    u, v, lam = x
    ab = jacobian_banded(grid, lam, beta, mu1, mu2, u, v)
    m = grid.mass
    b = solve_coupled_banded(ab, -interleave(m * u, np.zeros_like(v)))
    bu, bv = split(b)
    t = geo.normalize((bu, bv, 1.0))
    if geo.dot(t, prev) < 0:
        t = tuple(-c for c in t)
    return t


def _corrector(grid, beta, mu1, mu2, xp, t, geo, opts, polish=False):
    """Newton on F(u, v, lam) = 0 with <t, x - xp>_W = 0.

    Returns (x, iterations); raises NonConvergenceError.
    """
    u, v, lam = (np.array(xp[0]), np.array(xp[1]), float(xp[2]))
    m = grid.mass
    best = None
    extra = 3 if polish else 0
    for it in range(1, opts.max_corrector + 1 + extra):
        if not lam > 0:
            raise NonConvergenceError("corrector left lam > 0", last_residual=math.inf)
        ru, rv = residual_arrays(grid, lam, beta, mu1, mu2, u, v)
        g = geo.dot(t, (u - xp[0], v - xp[1], lam - xp[2]))
        ab = jacobian_banded(grid, lam, beta, mu1, mu2, u, v)
        rhs = np.column_stack([-interleave(m * ru, m * rv), -interleave(m * u, np.zeros_like(v))])
        sol = solve_coupled_banded(ab, rhs)
        a, b = split(sol[:, 0]), split(sol[:, 1])
        ta = geo.dot(t, (a[0], a[1], 0.0))
        tb = geo.dot(t, (b[0], b[1], 0.0)) + t[2]
        if tb == 0 or not np.isfinite(tb):
            raise NonConvergenceError("singular bordered system", last_residual=math.inf)
        dlam = (-g - ta) / tb
        u = u + a[0] + dlam * b[0]
        v = v + a[1] + dlam * b[1]
        lam = lam + dlam
        ru, rv = residual_arrays(grid, lam, beta, mu1, mu2, u, v)
        res = max(np.abs(ru).max(), np.abs(rv).max())
        if not np.isfinite(res):
            break
        if res <= opts.tol:
            if extra == 0 or (best is not None and res >= 0.5 * best[1]):
                return (u, v, lam) if best is None or res <= best[1] else best[0], it
            # keep iterating towards the roundoff floor of the grid
            best = ((u, v, lam), res)
            extra -= 1
        elif best is not None:
            return best[0], it
    raise NonConvergenceError(
        f"corrector did not converge in {opts.max_corrector} iterations",
        last_residual=float(res) if np.isfinite(res) else math.inf,
    )


def _capped_rho(state):
    d = state.diagnostics
    if d["mass_v"] == 0:
        return RHO_CAP
    return min(max(d["mass_u"] / d["mass_v"], RHO_FLOOR), RHO_CAP)


def _small_component(state):
    """1 when u is the vanishing component, 2 for v, else None."""
    d = state.diagnostics
    mu_, mv_ = d["mass_u"], d["mass_v"]
    if mu_ < CONNECT_RATIO * mv_:
        return 1
    if mv_ < CONNECT_RATIO * mu_:
        return 2
    return None


# -- seeding -----------------------------------------------------------------


def seed_branch(beta, family, curve, eps=1e-2, grid=None, opts=None):
    """First positive point on the branch bifurcating from semitrivial ``family``.

    family 1 is (U_{lam,mu1}, 0), family 2 is (0, U_{1,mu2}); the bifurcation
    is at lam = ell_family(beta).  ``eps`` is the size of the displacement
    along the kernel direction relative to the semitrivial amplitude.
    """
    opts = StepOptions() if opts is None else opts
    mu1, mu2 = curve.mu1, curve.mu2
    if family not in (1, 2):
        raise ParameterError(f"family must be 1 or 2, got {family}")
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    lam0 = ell(family, beta, curve)
    if grid is None:
        grid = grid_for_window(min(lam0, 1.0), max(lam0, 1.0))
    gs = ground_state_on(grid)
    try:
        ku, kv = bifurcation_tangent(family, lam0, beta, gs, mu1, mu2, grid, kernel_tol=1e-3)
    except DegeneracyError as exc:
        raise SeedError(f"no usable kernel at lam = {lam0:.6g}: {exc}") from exc
    zero = np.zeros(grid.n)
    if family == 1:
        base = semitrivial_profile(gs, grid, lam0, mu1)
        x0 = (base, zero, lam0)
    else:
        base = semitrivial_profile(gs, grid, 1.0, mu2)
        x0 = (zero, base, lam0)
    norm = math.sqrt(grid.integrate(base**2))
    geo = _Geometry(grid, norm)
    t0 = geo.normalize((ku.values * norm, kv.values * norm, 0.0))
    # eps relative to the semitrivial amplitude: |displacement| = eps N
    xp = _combine(x0, t0, eps)
    try:
        x, _ = _corrector(grid, beta, mu1, mu2, xp, t0, geo, replace(opts, max_corrector=20))
    except SolverError as exc:
        raise SeedError(
            f"seed corrector failed at lam = {lam0:.6g} ({exc}); try a larger eps or a finer grid"
        ) from exc
    state = make_state(grid, x[2], beta, mu1, mu2, x[0], x[1])
    if not state.positive:
        raise SeedError(
            f"seed fell back onto a {state.classification} state at lam = {lam0:.6g}; "
            "try a larger eps or a finer grid"
        )
    t = _tangent(grid, beta, mu1, mu2, x, geo, t0)
    point = BranchPoint(state, 0.0, t)
    return _SeedPoint(point, family, lam0, norm)


@dataclass(frozen=True, eq=False)
class _SeedPoint:
    point: BranchPoint
    family: object
    origin_lambda: float
    norm: float

    def __getattr__(self, name):
        return getattr(self.point, name)


def seed_explicit(beta, mu1, mu2, grid=None):
    """Interior seed at the closed-form lam = 1 solution."""
    grid = grid_for_lambda(1.0) if grid is None else grid
    state = explicit_solution_lambda1(mu1, mu2, beta, grid=grid)
    x = _state_tuple(state)
    norm = math.sqrt(grid.integrate(x[0] ** 2 + x[1] ** 2))
    geo = _Geometry(grid, norm)
    t = _tangent(grid, beta, mu1, mu2, x, geo, (0 * x[0], 0 * x[1], 1.0))
    return _SeedPoint(BranchPoint(state, 0.0, t), "explicit", 1.0, norm)


# -- tracing -----------------------------------------------------------------


def _edge_point(grid, beta, mu1, mu2, prev, nxt, edge):
    """Natural-parameter solve at lam = edge from a linear interpolant."""
    (u0, v0, l0), (u1, v1, l1) = prev, nxt
    th = (edge - l0) / (l1 - l0)
    guess_u = u0 + th * (u1 - u0)
    guess_v = v0 + th * (v1 - v0)
    u, v, it, _ = newton_arrays(grid, edge, beta, mu1, mu2, guess_u, guess_v)
    return make_state(grid, edge, beta, mu1, mu2, u, v, iterations=it)


def _trace_one_way(seed, window, opts, direction=1.0):
    st0 = seed.point.state
    grid, beta, mu1, mu2 = st0.grid, st0.beta, st0.mu1, st0.mu2
    geo = _Geometry(grid, seed.norm)
    lo, hi = window
    t = tuple(direction * c for c in seed.point.tangent)
    x = _state_tuple(st0)
    points = [BranchPoint(st0, 0.0, t)]
    s = 0.0
    ds = opts.ds0
    events = []
    termination = None
    while termination is None:
        if len(points) >= opts.max_points:
            termination = "fold-limit"
            break
        if ds < opts.ds_min:
            small = _small_component(points[-1].state)
            termination = "connected to other family" if small else "solver failure"
            break
        xp = _combine(x, t, ds)
        try:
            xn, iters = _corrector(grid, beta, mu1, mu2, xp, t, geo, opts)
        except SolverError:
            ds *= opts.shrink
            continue
        state = make_state(grid, xn[2], beta, mu1, mu2, xn[0], xn[1], iterations=iters)
        if not state.positive:
            ds *= opts.shrink
            continue
        rho_prev = _capped_rho(points[-1].state)
        if abs(math.log(_capped_rho(state) / rho_prev)) > opts.rho_jump:
            ds *= opts.shrink
            continue
        if not (lo <= xn[2] <= hi):
            edge = lo if xn[2] < lo else hi
            try:
                est = _edge_point(grid, beta, mu1, mu2, x, xn, edge)
                if est.positive:
                    sw = s + ds * abs((edge - x[2]) / (xn[2] - x[2]))
                    points.append(BranchPoint(est, sw, t))
            except SolverError:
                pass
            termination = "lambda_min reached" if edge == lo else "lambda_max reached"
            break
        tn = _tangent(grid, beta, mu1, mu2, xn, geo, t)
        if np.sign(tn[2]) != np.sign(t[2]) and t[2] != 0:
            events.append(("fold", float(xn[2]), s + ds))
        s += ds
        x, t = xn, tn
        points.append(BranchPoint(state, s, t))
        small = _small_component(state)
        if small is not None and len(points) > 2:
            termination = "connected to other family"
            break
        if iters <= opts.easy_iterations:
            ds = min(ds * opts.grow, opts.ds_max)
    return points, termination, events


def trace_branch(seed, lam_window=(0.05, 20.0), step_opts=None):
    """Follow the branch through ``seed`` inside ``lam_window``.

    Family seeds are followed away from the semitrivial family; an explicit
    seed is followed in both directions and the halves are joined.
    """
    opts = StepOptions() if step_opts is None else step_opts
    lo, hi = map(float, lam_window)
    if not (0 < lo < hi):
        raise ParameterError(f"invalid lambda window {lam_window}")
    st = seed.point.state
    if seed.family == "explicit":
        fwd, term_f, ev_f = _trace_one_way(seed, (lo, hi), opts, 1.0)
        bwd, term_b, ev_b = _trace_one_way(seed, (lo, hi), opts, -1.0)
        if len(fwd) < 2 and len(bwd) < 2:
            raise SeedError("continuation could not leave the explicit seed")
        joined = [
            BranchPoint(p.state, -p.arclength, tuple(-c for c in p.tangent))
            for p in reversed(bwd[1:])
        ] + fwd
        s0 = joined[0].arclength
        pts = tuple(BranchPoint(p.state, p.arclength - s0, p.tangent) for p in joined)
        term = f"{term_b} / {term_f}"
        events = tuple(ev_b) + tuple(ev_f)
        origin = "interior seed (explicit solution)"
    else:
        pts, term, events = _trace_one_way(seed, (lo, hi), opts, 1.0)
        if len(pts) < 2 and term not in ("lambda_min reached", "lambda_max reached"):
            raise SeedError("first continuation step failed; try a smaller ds0 or a finer grid")
        pts = tuple(pts)
        origin = f"family {seed.family} at ell{seed.family}(beta)"
    return Branch(
        beta=st.beta, mu1=st.mu1, mu2=st.mu2, origin=origin, points=pts,
        termination=term, norm=seed.norm, origin_lambda=seed.origin_lambda,
        events=tuple(events),
    )


def ratio_profile(branch):
    """[(lam, rho)] in arclength order, rho clipped to [1e-9, 1e9]."""
    if not branch.points:
        raise ParameterError("empty branch")
    return [(p.lam, _capped_rho(p.state)) for p in branch.points]


def ratio_range(branch):
    rhos = [r for _, r in ratio_profile(branch)]
    return min(rhos), max(rhos)


def ratio_brackets(branch, target):
    """Index pairs (i, i+1) whose rho values straddle ``target``, nearest lam = 1 first."""
    prof = ratio_profile(branch)
    out = []
    for i in range(len(prof) - 1):
        a, b = prof[i][1] - target, prof[i + 1][1] - target
        if a == 0 or a * b < 0:
            out.append(i)
    if prof and prof[-1][1] == target:
        out.append(len(prof) - 1)
    return sorted(set(out), key=lambda i: abs(math.log(prof[i][0])))


def find_ratio(branch, target, rtol=1e-8):
    """Positive state on ``branch`` with rho = target to ``rtol`` relative.

    The state's ``brackets`` are reported through ``find_ratio_all``; this
    returns the refinement of the bracket nearest lam = 1.
    """
    return find_ratio_all(branch, target, rtol, first_only=True)[0]


def find_ratio_all(branch, target, rtol=1e-8, first_only=False):
    if not target > 0:
        raise ParameterError(f"target ratio must be positive, got {target}")
    brackets = ratio_brackets(branch, target)
    if not brackets:
        lo, hi = ratio_range(branch)
        raise RangeError(
            f"ratio {target:.6g} outside the branch's achieved range [{lo:.6g}, {hi:.6g}]",
            achieved=(lo, hi),
        )
    out = []
    for i in brackets[:1] if first_only else brackets:
        out.append(_refine(branch, i, target, rtol))
    return out


def _refine(branch, i, target, rtol):
    pts = branch.points
    p0 = pts[i]
    if i + 1 >= len(pts) or p0.rho == target:
        return p0.state
    p1 = pts[i + 1]
    grid, st = p0.state.grid, p0.state
    geo = _Geometry(grid, branch.norm)
    x0, x1 = _state_tuple(p0.state), _state_tuple(p1.state)
    chord = (x1[0] - x0[0], x1[1] - x0[1], x1[2] - x0[2])
    t = geo.normalize(chord)
    opts = StepOptions(max_corrector=20)
    cache = {}

    def solve(theta):
        if theta not in cache:
            xp = (x0[0] + theta * chord[0], x0[1] + theta * chord[1], x0[2] + theta * chord[2])
            x, _ = _corrector(grid, st.beta, st.mu1, st.mu2, xp, t, geo, opts, polish=True)
            cache[theta] = make_state(grid, x[2], st.beta, st.mu1, st.mu2, x[0], x[1])
        return cache[theta]

    f = lambda th: math.log(solve(th).rho / target)
    f0, f1 = math.log(p0.rho / target), math.log(p1.rho / target)
    cache[0.0], cache[1.0] = p0.state, p1.state
    if f0 * f1 > 0:
        raise RangeError(f"bracket {i} does not straddle {target}")
    theta = optimize.brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    state = solve(theta)
    if abs(state.rho - target) > rtol * target:
        # brentq ends on its bracket tolerance; polish with secant steps
        a, fa = theta, f(theta)
        b = theta + 1e-9
        for _ in range(20):
            fb = f(b)
            if fb == fa:
                break
            a, b, fa = b, b - fb * (b - a) / (fb - fa), fb
            if abs(solve(a).rho - target) <= rtol * target:
                break
        state = solve(a)
    if abs(state.rho - target) > rtol * target:
        raise NonConvergenceError(
            f"ratio refinement reached {state.rho:.12g}, target {target:.12g}",
            last_residual=abs(state.rho - target),
        )
    if not state.positive:
        raise ClassificationError(state.classification, state)
    return state


def solve_with_ratio(state, target, grid=None, tol=1e-9, max_iter=30):
    """Newton in (u, v, lam) on F = 0 and log(|u|/|v|) = log(target).

    With ``grid`` the state is first resampled there, which moves it to a
    resolution suited to its own lam.
    """
    if not target > 0:
        raise ParameterError(f"target ratio must be positive, got {target}")
    grid = state.grid if grid is None else grid
    if grid == state.grid:
        u, v = np.array(state.u.values), np.array(state.v.values)
    else:
        u, v = state.u.at(grid.nodes), state.v.at(grid.nodes)
    lam, beta, mu1, mu2 = state.lam, state.beta, state.mu1, state.mu2
    w = 4.0 * math.pi * np.asarray(grid.weights)
    m = grid.mass
    best = None
    for it in range(1, max_iter + 1):
        ru, rv = residual_arrays(grid, lam, beta, mu1, mu2, u, v)
        res = max(np.abs(ru).max(), np.abs(rv).max())
        nu, nv = float(w @ u**2), float(w @ v**2)
        c = 0.5 * math.log(nu / nv) - math.log(target)
        if res <= tol and abs(c) <= 1e-13:
            if best is not None and res >= 0.5 * best[1]:
                break
            best = ((u, v, lam), res)
        ab = jacobian_banded(grid, lam, beta, mu1, mu2, u, v)
        rhs = np.column_stack([-interleave(m * ru, m * rv), -interleave(m * u, np.zeros_like(v))])
        sol = solve_coupled_banded(ab, rhs)
        a, b = split(sol[:, 0]), split(sol[:, 1])
        grad = lambda du, dv: float(w @ (u * du)) / nu - float(w @ (v * dv)) / nv
        den = grad(*b)
        if den == 0 or not math.isfinite(den):
            raise NonConvergenceError("ratio constraint is degenerate here", last_residual=res)
        dlam = -(c + grad(*a)) / den
        u, v, lam = u + a[0] + dlam * b[0], v + a[1] + dlam * b[1], lam + dlam
        if not lam > 0:
            raise NonConvergenceError("ratio Newton left lam > 0", last_residual=res)
    if best is None:
        raise NonConvergenceError(
            f"ratio-constrained Newton did not converge (residual {res:.3e})", last_residual=res
        )
    (u, v, lam), _ = best
    out = make_state(grid, lam, beta, mu1, mu2, u, v, iterations=it)
    if not out.positive:
        raise ClassificationError(out.classification, out)
    return out


# -- normalization -----------------------------------------------------------


def _normalized_diagnostics(grid, lam1, lam2, beta, mu1, mu2, u, v):
    lu, lv = minus_laplacian(grid, u), minus_laplacian(grid, v)
    ru = lu + lam1 * u - mu1 * u**3 - beta * v**2 * u
    rv = lv + lam2 * v - mu2 * v**3 - beta * u**2 * v
    i = grid.integrate
    lhs = lam1 * i(u**2) + lam2 * i(v**2)
    rhs = 0.25 * (mu1 * i(u**4) + mu2 * i(v**4) + 2.0 * beta * i(u**2 * v**2))
    return {
        "mass_u": math.sqrt(i(u**2)),
        "mass_v": math.sqrt(i(v**2)),
        "residual_inf": float(max(np.abs(ru).max(), np.abs(rv).max())),
        "pohozaev_rel": abs(lhs - rhs) / (abs(lhs) + abs(rhs)),
    }


def normalize(state, a, b, residual_tol=1e-7, ratio_tol=1e-6):
    """Rescale a solution with |u|/|v| = a/b to one with |u| = a, |v| = b.

    u(x) = alpha^2 u_lam(alpha^2 x), v likewise, alpha = |u_lam|/a;
    frequencies lam1 = lam alpha^4, lam2 = alpha^4.  The new grid is the old
    one scaled by alpha^-2, so nodal values carry over without interpolation.
    """
    if not (a > 0 and b > 0):
        raise ParameterError(f"masses must be positive, got a = {a}, b = {b}")
    q = a / b
    if abs(state.rho - q) > ratio_tol * q:
        raise ParameterError(
            f"state has |u|/|v| = {state.rho:.12g}, need a/b = {q:.12g} to {ratio_tol:g} relative"
        )
    alpha = state.diagnostics["mass_u"] / a
    a2 = alpha * alpha
    grid = state.grid.scaled(1.0 / a2)
    u = a2 * state.u.values
    v = a2 * state.v.values
    lam1, lam2 = state.lam * a2 * a2, a2 * a2
    diag = _normalized_diagnostics(grid, lam1, lam2, state.beta, state.mu1, state.mu2, u, v)
    if diag["residual_inf"] > residual_tol:
        raise AccuracyError(
            f"normalized residual {diag['residual_inf']:.3e} exceeds {residual_tol:g} "
            f"(alpha = {alpha:.4g}); refine the grid"
        )
    return NormalizedSolution(
        lam1=lam1, lam2=lam2, u=RadialField(grid, u), v=RadialField(grid, v),
        a=diag["mass_u"], b=diag["mass_v"], alpha=alpha, beta=state.beta,
        mu1=state.mu1, mu2=state.mu2, source=state, diagnostics=diag,
    )


def reverse_rescale(sol, grid=None):
    """Back to the frequency-ratio form: u_lam(y) = u(y / sqrt(lam2)) / sqrt(lam2).

    The nodes map onto ``sol.grid`` scaled by sqrt(lam2); pass ``grid`` to
    label them with an equal grid that differs only by rounding of r_max.
    """
    k = math.sqrt(sol.lam2)
    grid = sol.grid.scaled(k) if grid is None else grid
    if not math.isclose(grid.r_max, sol.grid.r_max * k, rel_tol=1e-12) or grid.n != sol.grid.n:
        raise ParameterError(f"{grid} is not {sol.grid} scaled by {k}")
    return make_state(
        grid, sol.lam1 / sol.lam2, sol.beta, sol.mu1, sol.mu2,
        sol.u.values / k, sol.v.values / k,
    )


def round_trip_error(sol):
    """Joint relative L^2 distance between the source state and the reversed solution."""
    src = sol.source
    back = reverse_rescale(sol, src.grid)
    return max(joint_distance(src, back), abs(back.lam - src.lam) / src.lam)


# -- pipeline ----------------------------------------------------------------


def endpoint_extrapolation(branch):
    """lam where the vanishing component's mass reaches 0, linear in that mass."""
    if len(branch.points) < 2 or "connected" not in branch.termination:
        return None
    a, b = branch.points[-2].state.diagnostics, branch.points[-1].state.diagnostics
    key = "mass_u" if b["mass_u"] < b["mass_v"] else "mass_v"
    m0, m1 = a[key], b[key]
    l0, l1 = branch.points[-2].lam, branch.points[-1].lam
    if m0 == m1:
        return None
    lam = l1 - m1 * (l1 - l0) / (m1 - m0)
    return {"component": key[-1], "family": 2 if key == "mass_u" else 1, "lambda": lam}


def default_seeds(beta, curve):
    """Families to seed from, in order, plus the explicit seed when it exists."""
    fams = [f for f in (1, 2) if beta > curve.mu(f) * curve.tau0]
    lo, hi = min(curve.mu1, curve.mu2), max(curve.mu1, curve.mu2)
    if beta < lo or beta > hi:
        fams.append("explicit")
    return fams


def covered(origin, branches):
    """True when family 2 was already reached by a family-1 branch."""
    return origin == 2 and any(
        br.termination == "connected to other family" and br.origin.startswith("family 1")
        for br in branches
    )


def pipeline_grid(beta, curve, window, h=0.01, decay=15.0):
    lo, hi = window
    ells = []
    for f in (1, 2):
        try:
            ells.append(ell(f, beta, curve))
        except (DomainError, RangeError):
            pass
    if len(ells) == 2:
        lo = max(lo, min(ells) / 1.5)
        hi = min(hi, max(ells) * 1.5)
    return grid_for_window(min(lo, 1.0), max(hi, 1.0), h=h, decay=decay)


def build_branch(beta, curve, origin, window=(0.05, 20.0), grid=None, step_opts=None, eps=1e-2,
                 h=0.01, decay=15.0):
    grid = pipeline_grid(beta, curve, window, h, decay) if grid is None else grid
    if origin == "explicit":
        seed = seed_explicit(beta, curve.mu1, curve.mu2, grid)
    else:
        seed = seed_branch(beta, int(origin), curve, eps=eps, grid=grid, opts=step_opts)
    return trace_branch(seed, window, step_opts)


def normalized_solution(curve, beta, a, b, window=(0.05, 20.0), grid=None, step_opts=None,
                        eps=1e-2, h=0.01, decay=15.0, ratio_tol=1e-8):
    """curves -> seed -> trace -> find_ratio -> normalize, trying each seed in turn.

    Returns (NormalizedSolution, Branch).
    """
    q = a / b
    seeds = default_seeds(beta, curve)
    if not seeds:
        raise DomainError(
            f"no branch to follow: beta = {beta} gives no bifurcation and no explicit solution"
        )
    ranges, branches = [], []
    for origin in seeds:
        if covered(origin, branches):
            continue
        branch = build_branch(beta, curve, origin, window, grid, step_opts, eps, h, decay)
        branches.append(branch)
        try:
            state = find_ratio(branch, q, ratio_tol)
        except RangeError as exc:
            ranges.append(exc.achieved)
            continue
        # the branch grid is fine enough for every lam on it; a grid matched to
        # this lam keeps the roundoff floor low once rescaling amplifies it
        state = solve_with_ratio(state, q, grid_for_lambda(state.lam, h=h, decay=decay))
        return normalize(state, a, b), branch
    lo = min(r[0] for r in ranges)
    hi = max(r[1] for r in ranges)
    raise RangeError(
        f"a/b = {q:.6g} not achieved on any traced branch (achieved [{lo:.6g}, {hi:.6g}])",
        achieved=(lo, hi),
    )
