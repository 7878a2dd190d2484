"""Exception hierarchy shared across the library."""


class LoadBlendError(Exception):
    """Base class for all library-specific errors."""


class InsufficientHistoryError(LoadBlendError):
    """Raised when a window or naive forecast reaches before available data."""

    def __init__(self, message, first_missing_day=None):
        super().__init__(message)
        self.first_missing_day = first_missing_day


class InsufficientSamplesError(LoadBlendError):
    """Raised when a covariance estimator gets too few rows."""


class DegenerateVarianceError(LoadBlendError):
    """Raised when an inverse-variance weight sees a zero or negative variance."""


class SingularCovarianceError(LoadBlendError):
    """Raised when a covariance matrix cannot be inverted."""


class DegenerateBenchmarkError(LoadBlendError):
    """Raised when the benchmark MAE is zero and a ratio is requested."""


class EmptyEvaluationError(LoadBlendError):
    """Raised when scoring is attempted over zero evaluated days."""


class IncompleteInputError(LoadBlendError):
    """Raised when a report is requested from partial results."""


class SchemaError(LoadBlendError):
    """Raised when an input file lacks a required column."""


class MissingDataError(LoadBlendError):
    """Raised when a panel has holes after normalization."""

    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = list(cells)
