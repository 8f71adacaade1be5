"""Scalar ground state U of -Delta U + U = U^3 in R^3 and its scaled family."""

import functools
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from .errors import ConfigurationError, NonConvergenceError, ParameterError
from .radial import (
    RadialField,
    grad_norm2,
    l2_norm,
    l4_norm4,
    make_grid,
    minus_laplacian,
    resample,
    stiffness_bands,
)

SHOOT_BRACKET = (1.0, 10.0)
MIN_GS_NODES = 500
MIN_GS_RMAX = 15.0


@dataclass(frozen=True, eq=False)
class GroundState:
    field: RadialField
    central_value: float
    sobolev_S: float
    mass: float
    l4: float
    residual: float
    grad2: float

    @property
    def grid(self):
        return self.field.grid

    @property
    def values(self):
        return self.field.values

    def diagnostics(self):
        return {
            "central_value": self.central_value,
            "S": self.sobolev_S,
            "mass": self.mass,
            "residual": self.residual,
        }


def _radial_rhs(r, y):
    return [y[1], -2.0 * y[1] / r + y[0] - y[0] ** 3]


def _crosses_zero(r, y):
    return y[0]


_crosses_zero.terminal = True
_crosses_zero.direction = -1


def _turns_up(r, y):
    return y[1]


_turns_up.terminal = True
_turns_up.direction = 1


def shoot(a, r_end=40.0, r0=1e-6):
    """Integrate u'' + (2/r) u' = u - u^3 from u(0) = a until the trajectory
    crosses zero or turns upward.  Returns (kind, solution) with kind in
    {"crosses", "turns", "none"}."""
    c = a * (1.0 - a * a) / 6.0
    sol = solve_ivp(
        _radial_rhs,
        (r0, r_end),
        [a + c * r0**2, 2.0 * c * r0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        events=[_crosses_zero, _turns_up],
        dense_output=True,
    )
    if sol.t_events[0].size:
        return "crosses", sol
    if sol.t_events[1].size:
        return "turns", sol
    return "none", sol


def shooting_central_value(bracket=SHOOT_BRACKET, tol=1e-13):
    """Bisection on U(0): overshoot crosses zero, undershoot turns upward."""
    lo, hi = bracket
    if shoot(hi)[0] != "crosses" or shoot(lo)[0] == "crosses":
        raise ConfigurationError(f"shooting bracket {bracket} does not enclose U(0)")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if shoot(mid)[0] == "crosses":
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@functools.lru_cache(maxsize=1)
def _shooting_profile():
    a = shooting_central_value()
    _, sol = shoot(a)
    # the trajectory leaves the decaying solution once roundoff is amplified;
    # trust it up to where it is still decreasing and positive
    r_stop = sol.t[-1] - 2.0
    return a, sol, r_stop


def _initial_guess(grid):
    _, sol, r_stop = _shooting_profile()
    r = grid.nodes
    inside = r < r_stop
    u = np.zeros(grid.n)
    u[inside] = sol.sol(np.maximum(r[inside], sol.t[0]))[0]
    return u


def newton_scalar(grid, lam, mu, guess, tol=1e-8, max_iter=40):
    """Newton for the discrete -Delta w + lam w = mu w^3 on ``grid``."""
    s0, s1, s2 = stiffness_bands(grid)
    m = grid.mass
    w = np.array(guess, dtype=float)
    step = np.inf
    for _ in range(max_iter):
        f = minus_laplacian(grid, w) + lam * w - mu * w**3
        ab = np.zeros((5, grid.n))
        ab[0, 2:] = s2
        ab[1, 1:] = s1
        ab[2] = s0 + m * (lam - 3.0 * mu * w**2)
        ab[3, :-1] = s1
        ab[4, :-2] = s2
        dw = linalg.solve_banded((2, 2), ab, -m * f, check_finite=False)
        w += dw
        step = np.abs(dw).max()
        if not np.isfinite(step):
            break
        if step <= 1e-13 * max(np.abs(w).max(), 1.0):
            break
    res = np.abs(minus_laplacian(grid, w) + lam * w - mu * w**3).max()
    if not np.isfinite(res) or res > tol:
        raise NonConvergenceError(
            f"scalar Newton stalled at residual {res:.3e} (last step {step:.3e})",
            last_residual=res,
        )
    return w, res


def central_value(grid, values):
    """U(0) from the even quadratic a + b r^2 + c r^4 through the first three nodes."""
    r2 = grid.nodes[:3] ** 2
    coef = np.linalg.solve(np.vander(r2, 3), values[:3])
    return float(coef[-1])


def solve_scalar_ground_state(grid):
    if grid.n < MIN_GS_NODES or grid.r_max < MIN_GS_RMAX:
        raise ConfigurationError(
            f"{grid} too coarse for the ground state (need n >= {MIN_GS_NODES}, "
            f"r_max >= {MIN_GS_RMAX})"
        )
    return _solve_cached(grid.r_max, grid.n)


@functools.lru_cache(maxsize=32)
def _solve_cached(r_max, n):
    grid = make_grid(r_max, n)
    # roundoff in the discrete Laplacian grows like 1/h^2
    tol = max(1e-8, 1e-13 / grid.h**2)
    u, res = newton_scalar(grid, 1.0, 1.0, _initial_guess(grid), tol=tol)
    # exact zeros are underflow far out on very large domains
    if np.any(u < 0) or u[0] <= 0:
        raise NonConvergenceError("ground-state Newton lost positivity", last_residual=res)
    f = RadialField(grid, u)
    l4_4 = l4_norm4(f)
    return GroundState(
        field=f,
        central_value=central_value(grid, u),
        sobolev_S=float(np.sqrt(l4_4)),
        mass=l2_norm(f),
        l4=float(l4_4**0.25),
        residual=float(res),
        grad2=grad_norm2(f),
    )


def ground_state_on(grid):
    """Ground state solved on ``grid`` itself (no interpolation)."""
    if grid.r_max < MIN_GS_RMAX:
        raise ConfigurationError(f"r_max = {grid.r_max} too small for the ground state")
    return _solve_cached(grid.r_max, grid.n)


def scaled_ground_state(gs, lam, mu, grid=None):
    """The field r -> sqrt(lam/mu) U(sqrt(lam) r) on ``grid`` (default: gs.grid).

    Values are copied exactly when the target nodes are the scaled nodes of
    gs.grid, otherwise resampled by monotone cubic interpolation.
    """
    if not (lam > 0 and mu > 0):
        raise ParameterError(f"lambda and mu must be positive, got {lam}, {mu}")
    grid = gs.grid if grid is None else grid
    x = np.sqrt(lam) * grid.nodes
    amp = np.sqrt(lam / mu)
    if grid.n == gs.grid.n and np.allclose(x, gs.grid.nodes, rtol=1e-13, atol=0):
        return RadialField(grid, amp * gs.values)
    return RadialField(grid, amp * resample(gs.grid, gs.values, x))
