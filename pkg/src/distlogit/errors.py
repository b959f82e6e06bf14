"""Exception hierarchy shared across the package."""

from __future__ import annotations


class DistlogitError(Exception):
    """Base class for all errors raised by this package."""


class DataError(DistlogitError):
    """Invalid input data, file contents, or command arguments."""


class ConfigError(DataError):
    """A configuration document violated its schema.

    The message carries the offending field path so callers can report it.
    """


class SingularDesignError(DataError):
    """The predictor cross-product matrix is numerically rank deficient."""

    def __init__(self, column: int, name: str | None = None):
        self.column = column
        self.name = name
        label = f"{name!r} (index {column})" if name else f"index {column}"
        super().__init__(
            f"design matrix is rank deficient: Cholesky pivot for predictor "
            f"column {label} fell below the tolerance"
        )


class DegenerateSpecError(DistlogitError):
    """A synthetic-data specification could not be realized."""
