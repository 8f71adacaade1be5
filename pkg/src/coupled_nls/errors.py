"""Exception hierarchy.

Every exception carries an ``exit_code`` used by the command-line front end:
2 for parameter/configuration problems, 3 for solver non-convergence and
4 for range/domain errors.
"""


class CoupledNLSError(Exception):
    exit_code = 1


class ParameterError(CoupledNLSError, ValueError):
    """Invalid sizes, mismatched grids, violated preconditions."""

    exit_code = 2


class ConfigurationError(ParameterError):
    """Bad run configuration, or a grid too small for the requested solve."""


class ConfigParseError(ConfigurationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SolverError(CoupledNLSError, RuntimeError):
    """A linear or nonlinear solve failed."""

    exit_code = 3


class NonConvergenceError(SolverError):
    def __init__(self, message, last_residual=None, state=None):
        self.last_residual = last_residual
        self.state = state
        super().__init__(message)


class ClassificationError(SolverError):
    """Newton converged, but not to a positive state.

    ``kind`` is ``"trivial"``, ``"semitrivial"`` or ``"sign-changing"``;
    ``state`` is the converged state, so callers may still use it.
    """

    def __init__(self, kind, state=None):
        self.kind = kind
        self.state = state
        super().__init__(f"converged to a {kind} state")


class SeedError(SolverError):
    pass


class DegeneracyError(SolverError):
    pass


class AccuracyError(SolverError):
    pass


class DomainError(CoupledNLSError, ValueError):
    exit_code = 4


class RangeError(CoupledNLSError, ValueError):
    exit_code = 4

    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)
