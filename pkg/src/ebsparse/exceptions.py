"""Exception types shared across the package.

The CLI maps each class to a process exit code, so library code raises the
most specific one that applies.
"""


class EBSparseError(Exception):
    """Base class for all package errors."""


class InputError(EBSparseError, ValueError):
    """Malformed or unreadable input data."""


class ConfigError(EBSparseError, ValueError):
    """Invalid model, sampler or study configuration."""


class UsageError(EBSparseError, ValueError):
    """A function was called outside its documented domain."""


class DegenerateEstimateError(UsageError):
    """A plug-in estimate is undefined for the given data."""


class NumericError(EBSparseError, ArithmeticError):
    """Non-finite values appeared during sampling or estimation."""

    def __init__(self, message, replication=None, seed=None):
        super().__init__(message)
        self.replication = replication
        self.seed = seed
