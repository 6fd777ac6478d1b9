"""Exception types shared across the package."""

from __future__ import annotations


class PucciEigenError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PucciEigenError, ValueError):
    """An argument violates a documented precondition."""


class SingularityError(PucciEigenError, ArithmeticError):
    """|p|^alpha with alpha < 0 evaluated at p = 0 without regularization."""


class PoleError(PucciEigenError, ArithmeticError):
    """Radial operator evaluated at r = 0."""


class ResolutionError(PucciEigenError, ValueError):
    """Grid too coarse for the requested domain."""


class DomainError(PucciEigenError, ValueError):
    """Point lies outside the closed domain."""


class BracketError(PucciEigenError, RuntimeError):
    """Bisection endpoints do not bracket the eigenvalue."""


class IndeterminateLambdaError(PucciEigenError, RuntimeError):
    """Feasibility probe ran out of budget before deciding."""

    def __init__(self, message: str, lam: float):
        super().__init__(message)
        self.lam = lam


class NonConvergenceError(PucciEigenError, RuntimeError):
    """Iterative solver did not reach its tolerance within the step budget."""

    def __init__(self, message: str, residual: float = float("nan"), step: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class BarrierFailureError(PucciEigenError, RuntimeError):
    """A barrier candidate failed certification at some sampled point."""

    def __init__(self, message: str, worst_point=None, worst_value: float = float("nan")):
        super().__init__(message)
        self.worst_point = worst_point
        self.worst_value = worst_value


class ConfigError(PucciEigenError, ValueError):
    """Configuration text could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 key: str | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column
        self.key = key
