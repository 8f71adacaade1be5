"""Radial grids, quadrature and the discrete radial Laplacian.

Functions on R^3 that depend only on r = |x| are sampled on a uniform
staggered grid r_i = (i - 1/2) h, h = r_max / n.  The Laplacian is
discretized through w = r f, for which -Delta f = -w''/r, using the
five-point fourth-order second difference on w.  Ghost values are odd
reflections of w about r = 0 (regularity, f even) and about r = r_max
(f(r_max) = 0).  Multiplying by h r_i gives the symmetric pentadiagonal
stiffness matrix S and the diagonal mass matrix M = diag(h r_i^2):

    M (-Delta f) = S f.

So -Delta + c is self-adjoint in the M inner product and every linear
solve is a symmetric banded one.

Integrals use ``grid.weights``: the midpoint rule in r^2 dr plus an
Euler-Maclaurin endpoint correction at r_max, which makes the rule exact for
constants; for fields that decay before r_max the correction is negligible
and the rule is spectrally accurate (the integrands are even in r).
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.interpolate import PchipInterpolator

from .errors import ParameterError, SolverError

FOUR_PI = 4.0 * np.pi
MIN_NODES = 16


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform staggered grid on (0, r_max).

    ``weights`` integrate against r^2 dr: sum(weights * f) approximates
    int_0^r_max f(r) r^2 dr.  ``mass`` is the diagonal of M.
    """

    r_max: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    mass: np.ndarray

    @property
    def h(self):
        return self.r_max / self.n

    def key(self):
        return (float(self.r_max), int(self.n))

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"RadialGrid(r_max={self.r_max!r}, n={self.n})"

    def scaled(self, factor):
        """Same node count, every length multiplied by ``factor``."""
        return make_grid(self.r_max * factor, self.n)

    def integrate(self, values):
        """4 pi int f(r) r^2 dr for nodal values."""
        return FOUR_PI * float(np.dot(self.weights, values))


def make_grid(r_max, n):
    try:
        r_max = float(r_max)
    except (TypeError, ValueError):
        raise ParameterError(f"r_max must be a number, got {r_max!r}") from None
    if not np.isfinite(r_max) or r_max <= 0:
        raise ParameterError(f"r_max must be positive, got {r_max}")
    if isinstance(n, bool) or int(n) != n or n < MIN_NODES:
        raise ParameterError(f"n must be an integer >= {MIN_NODES}, got {n}")
    n = int(n)
    h = r_max / n
    nodes = h * (np.arange(1, n + 1) - 0.5)
    mass = h * nodes**2
    weights = mass.copy()
    # Euler-Maclaurin end correction (h^2/24) g'(r_max), g = r^2 f, with a
    # one-sided three-point derivative; exact for constant f.
    weights[-3:] += (h / 24.0) * np.array([1.0, -3.0, 2.0]) * nodes[-3:] ** 2
    return RadialGrid(r_max, n, _frozen(nodes), _frozen(weights), _frozen(mass))


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.n,):
            raise ParameterError(
                f"field has shape {values.shape}, grid has {self.grid.n} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        object.__setattr__(self, "values", values)

    def scaled(self, c):
        return RadialField(self.grid, c * self.values)

    def at(self, r):
        """Evaluate by monotone cubic interpolation; zero beyond r_max."""
        return resample(self.grid, self.values, r)


def _check_same_grid(*fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ParameterError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


def l2_norm(f):
    return float(np.sqrt(max(f.grid.integrate(f.values**2), 0.0)))


def l4_norm4(f):
    return f.grid.integrate(f.values**4)


def grad_norm2(f):
    """|grad f|_2^2 as the discrete Dirichlet form 4 pi <f, S f>."""
    return FOUR_PI * float(np.dot(f.values, stiffness_apply(f.grid, f.values)))


def weighted_inner(f, g, w=1.0):
    """4 pi int f g w r^2 dr; ``w`` is a scalar, an array or a RadialField."""
    if isinstance(w, RadialField):
        grid = _check_same_grid(f, g, w)
        w = w.values
    else:
        grid = _check_same_grid(f, g)
    return grid.integrate(f.values * g.values * w)


def resample(grid, values, r):
    """Monotone cubic (PCHIP) interpolation; even about 0, zero from r_max on."""
    r = np.abs(np.asarray(r, dtype=float))
    x = np.concatenate(([-grid.nodes[0]], grid.nodes, [grid.r_max]))
    y = np.concatenate(([values[0]], values, [0.0]))
    out = PchipInterpolator(x, y, extrapolate=False)(r)
    return np.where(np.isnan(out), 0.0, out)


def stiffness_bands(grid):
    """Upper bands (s0, s1, s2) of the symmetric pentadiagonal S."""
    n, h, r = grid.n, grid.h, grid.nodes
    c = 1.0 / (12.0 * h * h)
    d0 = np.full(n, -30.0 * c)
    d1 = np.full(n - 1, 16.0 * c)
    d2 = np.full(n - 2, -1.0 * c)
    # odd ghosts for w = r f at both ends
    d0[0] -= 16.0 * c
    d0[-1] -= 16.0 * c
    d1[0] += 1.0 * c
    d1[-1] += 1.0 * c
    s0 = -h * r * d0 * r
    s1 = -h * r[:-1] * d1 * r[1:]
    s2 = -h * r[:-2] * d2 * r[2:]
    return s0, s1, s2


def sym_penta_apply(bands, x):
    s0, s1, s2 = bands
    y = s0 * x
    y[:-1] += s1 * x[1:]
    y[1:] += s1 * x[:-1]
    y[:-2] += s2 * x[2:]
    y[2:] += s2 * x[:-2]
    return y


def stiffness_apply(grid, values):
    return sym_penta_apply(stiffness_bands(grid), values)


def minus_laplacian(grid, values):
    """Nodal values of the discrete -Delta f."""
    return stiffness_apply(grid, values) / grid.mass


class BandedOperator:
    """The operator -Delta_rad + c(r) on a radial grid.

    ``rows`` holds the five stencil diagonals of the nodal form
    M^{-1} S + diag(c) in scipy's (l, u) = (2, 2) banded layout.
    ``symmetric_bands`` are the upper bands of S + M diag(c), the form
    that is conjugate to it by M^{1/2}.
    """

    bandwidth = 2

    def __init__(self, grid, c=0.0):
        self.grid = grid
        c = np.broadcast_to(np.asarray(c, dtype=float), (grid.n,)).copy()
        if not np.all(np.isfinite(c)):
            raise ParameterError("potential must be finite")
        self.c = _frozen(c)
        s0, s1, s2 = stiffness_bands(grid)
        m = grid.mass
        self.symmetric_bands = (_frozen(s0 + m * c), _frozen(s1), _frozen(s2))
        rows = np.zeros((5, grid.n))
        rows[0, 2:] = s2 / m[:-2]
        rows[1, 1:] = s1 / m[:-1]
        rows[2] = s0 / m + c
        rows[3, :-1] = s1 / m[1:]
        rows[4, :-2] = s2 / m[2:]
        self.rows = _frozen(rows)

    def apply_values(self, x):
        return sym_penta_apply(self.symmetric_bands, x) / self.grid.mass

    def apply(self, f):
        if f.grid != self.grid:
            raise ParameterError("grid mismatch between operator and field")
        return RadialField(self.grid, self.apply_values(f.values))

    def dense(self):
        n = self.grid.n
        m = np.zeros((n, n))
        for k in range(-2, 3):
            idx = np.arange(max(0, -k), min(n, n - k))
            m[idx, idx + k] = self.rows[2 - k, idx + k]
        return m

    def symmetrized_dense(self):
        """M^{1/2} L M^{-1/2}."""
        s = np.sqrt(self.grid.mass)
        return (s[:, None] * self.dense()) / s[None, :]


def solve_banded_values(op, rhs):
    s0, s1, s2 = op.symmetric_bands
    n = op.grid.n
    ab = np.zeros((3, n))
    ab[0, 2:] = s2
    ab[1, 1:] = s1
    ab[2] = s0
    try:
        return linalg.solveh_banded(ab, op.grid.mass * rhs, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SolverError(
            f"operator is not positive definite (Cholesky pivot failure: {exc})"
        ) from exc


def solve_banded(op, rhs):
    """Solve (-Delta + c) x = rhs for a positive definite operator."""
    if rhs.grid != op.grid:
        raise ParameterError("grid mismatch between operator and right-hand side")
    return RadialField(op.grid, solve_banded_values(op, rhs.values))


def coupled_banded(grid, du, dv, cross):
    """Banded layout (l = u = 4) of the symmetric 2x2 block system

        [S + M du,   M cross]
        [M cross,    S + M dv]

    with unknowns interleaved as (u_0, v_0, u_1, v_1, ...).
    """
    n = grid.n
    s0, s1, s2 = stiffness_bands(grid)
    m = grid.mass
    ab = np.zeros((9, 2 * n))
    mid = 4
    diag = np.empty(2 * n)
    diag[0::2] = s0 + m * du
    diag[1::2] = s0 + m * dv
    ab[mid] = diag
    off1 = np.zeros(2 * n - 1)
    off1[0::2] = m * cross
    ab[mid - 1, 1:] = off1
    ab[mid + 1, :-1] = off1
    off2 = np.empty(2 * n - 2)
    off2[0::2] = s1
    off2[1::2] = s1
    ab[mid - 2, 2:] = off2
    ab[mid + 2, :-2] = off2
    off4 = np.empty(2 * n - 4)
    off4[0::2] = s2
    off4[1::2] = s2
    ab[mid - 4, 4:] = off4
    ab[mid + 4, :-4] = off4
    return ab


def solve_coupled_banded(ab, rhs):
    try:
        return linalg.solve_banded((4, 4), ab, rhs, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"singular coupled Jacobian: {exc}") from exc
