"""Exception types shared across the package.

All are ordinary Python exceptions; ``ValueError`` subclasses signal bad
inputs or requests outside a method's domain, ``RuntimeError`` subclasses
signal numerical trouble discovered while computing.
"""


class DataError(ValueError):
    """Malformed, inconsistent, or out-of-contract input data."""


class DegreesOfFreedomError(ValueError):
    """An estimator's effective degrees of freedom are not positive."""


class RankError(ValueError):
    """A requested component count exceeds the numeric rank."""


class NumericError(RuntimeError):
    """A numeric routine failed (SVD non-convergence, invalid posterior, ...)."""


class OptimizationError(RuntimeError):
    """An optimizer could not find any finite objective value.

    Carries the scanned points so the failure can be diagnosed.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class InstabilityError(RuntimeError):
    """A closed-form estimator hit a numerically vanishing denominator."""
