"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, ForwardSolveError and
LinearSolverError -> 3, OptimizerError -> 4.
"""


class BathyrecError(Exception):
    """Base class for all package errors."""


class ConfigError(BathyrecError):
    """Invalid configuration, scenario name, or file format."""


class ForwardSolveError(BathyrecError):
    """Forward solver failure (positivity loss, CFL violation, bad state)."""


class LinearSolverError(BathyrecError):
    """Linear solve did not reach the requested residual tolerance."""


class OptimizerError(BathyrecError):
    """Optimization step did not converge within its iteration budget."""
