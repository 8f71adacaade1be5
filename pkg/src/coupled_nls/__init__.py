"""Radial solvers for a cubic two-component Schrodinger system in R^3:
ground state, weighted eigenvalue and bifurcation curves, Newton and
pseudo-arclength continuation, rescaling to prescribed masses, and evidence
maps for existence."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ClassificationError,
    ConfigParseError,
    ConfigurationError,
    CoupledNLSError,
    DomainError,
    NonConvergenceError,
    ParameterError,
    RangeError,
    SeedError,
    SolverError,
)
from .radial import RadialField, RadialGrid, make_grid  # noqa: E402

__all__ = [
    "ClassificationError",
    "ConfigParseError",
    "ConfigurationError",
    "CoupledNLSError",
    "DomainError",
    "NonConvergenceError",
    "ParameterError",
    "RadialField",
    "RadialGrid",
    "RangeError",
    "SeedError",
    "SolverError",
    "make_grid",
]
