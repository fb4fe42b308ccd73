"""Exception types raised across the package."""

import numpy as np


class InvalidInputError(ValueError):
    """Input violates a documented precondition (non-finite, negative weight, ...)."""


class UnderdeterminedError(InvalidInputError):
    """Fewer than eight usable correspondences."""


class DegenerateConfigurationError(InvalidInputError):
    """Geometric degeneracy, e.g. coincident points or a zero baseline."""


class ConfigError(InvalidInputError):
    """A configuration object fails validation."""


class ContractViolation(InvalidInputError):
    """A structural contract (symmetry, shape) of a numeric routine was broken."""


class NumericError(ArithmeticError):
    """An iterative numeric kernel failed to converge."""


class SingularSystemError(np.linalg.LinAlgError):
    """Linear system is singular or too badly conditioned to trust.

    The estimated 1-norm condition number is kept in ``condition``.
    """

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class PreconditionError(RuntimeError):
    """A solver result does not satisfy what a downstream step requires."""


class AmbiguousPoseError(RuntimeError):
    """Cheirality voting produced a tie between pose candidates."""

    def __init__(self, message, tied):
        super().__init__(message)
        self.tied = tied


class ParseError(InvalidInputError):
    """A data file could not be parsed; ``line`` is 1-based (0 if unknown)."""

    def __init__(self, message, path=None, line=0):
        where = f"{path}:{line}" if path is not None else f"line {line}"
        super().__init__(f"{where}: {message}" if line else message)
        self.path = path
        self.line = line
