"""The weighted eigenvalue tau(s), its limit tau0, and the bifurcation curves.

tau(s) is the smallest eigenvalue of (-Delta + s) phi = tau U^2 phi over
radial functions.  Positive solutions branch off the semitrivial family
(U_{lam,mu1}, 0) where beta = mu1 tau(1/lam) and off (0, U_{1,mu2}) where
beta = mu2 tau(lam).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, sparse
from scipy.sparse.linalg import eigsh

from .errors import DegeneracyError, DomainError, NonConvergenceError, ParameterError, RangeError
from .groundstate import ground_state_on, newton_scalar, scaled_ground_state
from .radial import RadialField, l2_norm, make_grid, stiffness_bands, sym_penta_apply

SMALL_SHIFT = 1e-2
LARGE_DOMAIN = 200.0
MIN_LARGE_DOMAIN = 100.0
TAU0_RADII = (100.0, 200.0, 400.0)
BASE_H = 0.02


class AccuracyWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class EigenResult:
    s: float
    tau: float
    phi: RadialField
    iterations: int
    residual: float


@dataclass(frozen=True)
class Tau0Result:
    value: float
    error: float
    radii: tuple
    sequence: tuple
    exponent: float
    warning: str = ""

    def __float__(self):
        return self.value


def grid_for_shift(s_lo, s_hi=None, h=BASE_H):
    """A grid that resolves the eigenfunction for every shift in [s_lo, s_hi].

    The domain covers ~30 decay lengths of the slowest shift, the spacing
    ~50 points per length scale of the fastest one.
    """
    s_hi = s_lo if s_hi is None else s_hi
    r_max = 20.0 if s_lo <= 0 else max(20.0, 30.0 / math.sqrt(s_lo))
    if s_lo < SMALL_SHIFT:
        r_max = max(r_max, LARGE_DOMAIN)
    step = h * min(1.0, 1.0 / math.sqrt(max(s_hi, 1e-300)))
    n = int(math.ceil(r_max / step))
    return make_grid(r_max, n)


def _potential_on(grid, gs):
    if gs is not None and gs.grid == grid:
        return gs.values
    return ground_state_on(grid).values


def _inverse_iteration(grid, shift_mass, weight, tol=1e-13, max_iter=2000, res_tol=1e-9):
    """Smallest eigenpair of (S + M shift) x = t (M weight) x, weight >= 0."""
    s0, s1, s2 = stiffness_bands(grid)
    m = grid.mass
    a0 = s0 + m * shift_mass
    ab = np.zeros((3, grid.n))
    ab[0, 2:] = s2
    ab[1, 1:] = s1
    ab[2] = a0
    try:
        cb = linalg.cholesky_banded(ab, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NonConvergenceError(f"eigen pencil not positive definite: {exc}") from exc
    d = m * weight
    x = np.exp(-grid.nodes)
    t_old = res_old = np.inf
    for it in range(1, max_iter + 1):
        y = linalg.cho_solve_banded((cb, False), d * x, check_finite=False)
        ay = sym_penta_apply((a0, s1, s2), y)
        dy = y @ (d * y)
        t = (y @ ay) / dy
        x = y / math.sqrt(dy)
        # the eigenvalue settles quadratically faster than the vector, so
        # also wait for the nodal residual to reach its floor
        r = (ay / math.sqrt(dy) - t * d * x) / m
        res = math.sqrt(float(grid.weights @ r**2))
        if abs(t - t_old) <= tol * abs(t) and (res <= res_tol or res >= res_old):
            return t, x, it
        t_old, res_old = t, res
    raise NonConvergenceError(f"inverse iteration did not converge in {max_iter} steps")


def tau(s, gs=None, grid=None, tol=1e-13, max_iter=2000):
    """Smallest eigenvalue of (-Delta + s) phi = tau U^2 phi.

    U is the ground state on the same grid (solved there if ``gs`` lives on a
    different grid).  phi is positive with int U^2 phi^2 = 1.
    """
    if not s >= 0:
        raise ParameterError(f"shift must be nonnegative, got {s}")
    if grid is None:
        grid = gs.grid if gs is not None and s >= SMALL_SHIFT else grid_for_shift(s)
    if s < SMALL_SHIFT and grid.r_max < MIN_LARGE_DOMAIN:
        raise ParameterError(
            f"shift {s} < {SMALL_SHIFT} needs r_max >= {MIN_LARGE_DOMAIN}, got {grid.r_max}"
        )
    U = _potential_on(grid, gs)
    t, x, it = _inverse_iteration(grid, s, U**2, tol=tol, max_iter=max_iter)
    x = np.abs(x)
    norm = math.sqrt(grid.integrate(U**2 * x**2))
    phi = x / norm
    op = sym_penta_apply(stiffness_bands(grid), phi) / grid.mass + s * phi
    res = l2_norm(RadialField(grid, op - t * U**2 * phi))
    return EigenResult(float(s), float(t), RadialField(grid, phi), it, res)


def tau_value(s, grid, tol=1e-13):
    return tau(s, grid=grid, tol=tol).tau


def rayleigh_quotient(phi, s, U):
    grid = phi.grid
    num = phi.values @ sym_penta_apply(stiffness_bands(grid), phi.values) + s * (
        grid.mass @ phi.values**2
    )
    return float(num / (grid.mass @ (U**2 * phi.values**2)))


def tau0(gs=None, radii=TAU0_RADII, h=BASE_H):
    """tau(0) on growing Dirichlet balls, Richardson-extrapolated in r_max.

    The decay exponent p of the truncation error is estimated from the three
    values; the error bar is the size of the extrapolation correction.
    """
    seq = []
    for r in radii:
        grid = make_grid(r, int(math.ceil(r / h)))
        seq.append(tau(0.0, grid=grid).tau)
    t1, t2, t3 = seq
    d1, d2 = t1 - t2, t2 - t3
    warning = ""
    q = radii[1] / radii[0]
    if d1 > 0 and d2 > 0 and d1 > d2:
        p = math.log(d1 / d2) / math.log(q)
        corr = d2 / (q**p - 1.0)
        value = t3 - corr
        error = abs(corr)
    else:
        p = float("nan")
        value = t3
        error = abs(d2) if d2 else abs(d1)
        warning = "non-monotone extrapolation sequence; returning the largest-domain value"
        warnings.warn(warning, AccuracyWarning, stacklevel=2)
    return Tau0Result(value, error, tuple(radii), tuple(seq), p, warning)


@dataclass(frozen=True, eq=False)
class CurvePair:
    mu1: float
    mu2: float
    lam: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    lam_star: float
    beta_star: float
    tau0: float
    tau0_error: float = 0.0
    extra: dict = field(default_factory=dict)

    def beta(self, which):
        return self.beta1 if which == 1 else self.beta2

    def mu(self, which):
        return self.mu1 if which == 1 else self.mu2


def _check_mu(mu1, mu2):
    if not (mu1 > 0 and mu2 > 0):
        raise ParameterError(f"mu1, mu2 must be positive, got {mu1}, {mu2}")


def default_lambda_grid(n=200, lo=1e-3, hi=1e3):
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _tau_table(svals, h=BASE_H, tol=1e-13):
    out = {}
    for s in svals:
        out[float(s)] = tau_value(float(s), grid_for_shift(float(s), h=h), tol)
    return out


def _solve_shift(target, s_lo, s_hi, xtol=1e-14, h=BASE_H, tol=1e-13):
    """s in [s_lo, s_hi] with tau(s) = target, all solves on one grid."""
    grid = grid_for_shift(s_lo, s_hi, h=h)
    f = lambda logs: tau_value(math.exp(logs), grid, tol) - target
    a, b = math.log(s_lo), math.log(s_hi)
    fa, fb = f(a), f(b)
    if fa * fb > 0:
        raise RangeError(f"tau - {target} does not change sign on [{s_lo}, {s_hi}]")
    root = optimize.brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return math.exp(root), grid


def curves(mu1, mu2, lam_grid=None, tau0_result=None, h=BASE_H, tol=1e-13):
    """Tabulate beta1(lam) = mu1 tau(1/lam), beta2(lam) = mu2 tau(lam) and find lam*.

    ``h`` is the eigenproblem grid step at unit shift, ``tol`` the relative
    tolerance of inverse iteration.
    """
    _check_mu(mu1, mu2)
    lam = np.asarray(default_lambda_grid() if lam_grid is None else lam_grid, dtype=float)
    if lam.ndim != 1 or lam.size < 2 or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
        raise ParameterError("lambda grid must be positive and strictly increasing")
    table = _tau_table(sorted(set(lam.tolist()) | set((1.0 / lam).tolist())), h, tol)
    beta1 = np.array([mu1 * table[float(1.0 / x)] for x in lam])
    beta2 = np.array([mu2 * table[float(x)] for x in lam])
    diff = beta1 - beta2
    idx = np.nonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))[0]
    exact = np.nonzero(diff == 0)[0]
    if exact.size:
        lam_lo = lam_hi = lam[exact[0]]
    elif idx.size:
        lam_lo, lam_hi = lam[idx[0]], lam[idx[0] + 1]
    else:
        side = "right" if diff[-1] > 0 else "left"
        raise RangeError(
            f"beta1 - beta2 has no sign change on [{lam[0]:.3g}, {lam[-1]:.3g}]; "
            f"extend the lambda grid to the {side}"
        )
    if lam_lo == lam_hi:
        lam_star = float(lam_lo)
    else:
        # one grid for both tau(lam) and tau(1/lam) keeps the difference continuous
        s_lo = min(lam_lo, 1.0 / lam_hi)
        s_hi = max(lam_hi, 1.0 / lam_lo)
        grid = grid_for_shift(s_lo, s_hi, h=h)
        g = lambda ll: mu1 * tau_value(math.exp(-ll), grid, tol) - mu2 * tau_value(math.exp(ll), grid, tol)
        a, b = math.log(lam_lo), math.log(lam_hi)
        if g(a) * g(b) > 0:
            # the tabulated bracket came from per-shift grids; widen by one cell
            a, b = a - 0.1, b + 0.1
        lam_star = math.exp(optimize.brentq(g, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps))
    s_pair = min(lam_star, 1 / lam_star), max(lam_star, 1 / lam_star)
    beta_star = mu2 * tau_value(lam_star, grid_for_shift(*s_pair, h=h), tol)
    t0 = tau0(h=h) if tau0_result is None else tau0_result
    return CurvePair(
        mu1=float(mu1),
        mu2=float(mu2),
        lam=lam,
        beta1=beta1,
        beta2=beta2,
        lam_star=float(lam_star),
        beta_star=float(beta_star),
        tau0=float(t0.value),
        tau0_error=float(t0.error),
        extra={"h": h, "tol": tol},
    )


def ell(which, beta, curve):
    """Bifurcation point lam = ell_which(beta) with beta_which(lam) = beta.

    Raises DomainError when beta <= mu_which tau0 (no bifurcation point).
    """
    if which not in (1, 2):
        raise ParameterError(f"family must be 1 or 2, got {which}")
    mu = curve.mu(which)
    if beta <= mu * curve.tau0:
        raise DomainError(
            f"no bifurcation point exists from family {which}: "
            f"beta = {beta} <= mu{which} tau0 = {mu * curve.tau0:.6g}"
        )
    target = beta / mu
    # tau(s) = target, then lam = s (family 2) or 1/s (family 1)
    tvals = curve.beta2 / curve.mu2 if which == 2 else (curve.beta1 / curve.mu1)[::-1]
    sgrid = curve.lam if which == 2 else (1.0 / curve.lam)[::-1]
    k = np.searchsorted(tvals, target)
    if k == 0 or k == len(tvals):
        raise RangeError(
            f"beta = {beta} outside the tabulated range of beta{which} "
            f"[{mu * tvals[0]:.6g}, {mu * tvals[-1]:.6g}]; extend the lambda grid"
        )
    s_lo, s_hi = sgrid[k - 1] / 1.05, sgrid[k] * 1.05
    s, _ = _solve_shift(target, s_lo, s_hi, h=curve.extra.get("h", BASE_H),
                        tol=curve.extra.get("tol", 1e-13))
    return s if which == 2 else 1.0 / s


def semitrivial_profile(gs, grid, lam, mu):
    """Discrete U_{lam,mu} on ``grid``: Newton from the interpolated scaling."""
    guess = scaled_ground_state(gs, lam, mu, grid).values
    w, _ = newton_scalar(grid, lam, mu, guess, tol=1e-8)
    return w


def _kernel_block(grid, shift, potential):
    """Symmetric sparse M^{-1/2}(S + M(shift - potential))M^{-1/2}."""
    s0, s1, s2 = stiffness_bands(grid)
    m = grid.mass
    a = sparse.diags([s2, s1, s0 + m * (shift - potential), s1, s2], [-2, -1, 0, 1, 2])
    d = sparse.diags(1.0 / np.sqrt(m))
    return (d @ a @ d).tocsc()


def bifurcation_tangent(which, lam, beta, gs, mu1=1.0, mu2=1.0, grid=None,
                        kernel_tol=1e-5, gap=1e-3):
    """Kernel direction (u-part, v-part) of the linearization at the semitrivial
    solution of family ``which``; unit L^2 norm, positive.

    Family 2: (phi, 0) with (-Delta + lam) phi = beta U_{1,mu2}^2 phi.
    Family 1: (0, psi) with (-Delta + 1) psi = beta U_{lam,mu1}^2 psi.
    The other diagonal block (-Delta + c - 3 mu U^2) has no radial kernel; the
    two eigenvalues of the active block nearest zero certify a one-dimensional
    kernel.
    """
    grid = gs.grid if grid is None else grid
    if which == 2:
        w = semitrivial_profile(gs, grid, 1.0, mu2)
        shift = lam
    elif which == 1:
        w = semitrivial_profile(gs, grid, lam, mu1)
        shift = 1.0
    else:
        raise ParameterError(f"family must be 1 or 2, got {which}")
    a = _kernel_block(grid, shift, beta * w**2)
    # a fixed start vector; ARPACK's default is random and breaks reproducibility
    v0 = np.sqrt(grid.mass) * w
    vals, vecs = eigsh(a, k=2, sigma=0.0, which="LM", v0=v0)
    order = np.argsort(np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    if abs(vals[0]) > kernel_tol:
        raise DegeneracyError(
            f"({lam}, {beta}) is not on bifurcation curve {which}: "
            f"smallest eigenvalue of the linearization is {vals[0]:.3e}"
        )
    if abs(vals[1]) < gap:
        raise DegeneracyError(f"kernel dimension > 1: second eigenvalue {vals[1]:.3e}")
    x = vecs[:, 0] / np.sqrt(grid.mass)
    x = x * np.sign(x[np.argmax(np.abs(x))])
    x /= l2_norm(RadialField(grid, x))
    zero = np.zeros(grid.n)
    if which == 2:
        return RadialField(grid, x), RadialField(grid, zero)
    return RadialField(grid, zero), RadialField(grid, x)
