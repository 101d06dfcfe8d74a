"""Shared exception types."""


class SensokitError(Exception):
    """Base class for all errors raised by this package."""


class ImportError_(SensokitError):
    """Raised when a raw file cannot be turned into a dataset."""


class ValidationError(SensokitError):
    """Raised when inputs violate a method's preconditions."""


class ConvergenceError(SensokitError):
    """Raised when an iterative fit fails to converge."""

    def __init__(self, message: str, component: int | None = None):
        super().__init__(message)
        self.component = component


class FoldError(SensokitError):
    """Raised when a cross-validation fold cannot be processed."""

    def __init__(self, message: str, fold: int):
        super().__init__(message)
        self.fold = fold
