"""Exception types shared across the package."""


class RepfnError(Exception):
    """Base class for package errors."""


class ConfigError(RepfnError, ValueError):
    """Invalid parameters or configuration."""


class BudgetExceeded(RepfnError):
    """An enumeration or memory budget would be exceeded."""


class AssertionFailure(RepfnError):
    """A numerical check run by an experiment did not hold."""


class OutOfRange(RepfnError, IndexError):
    """A query falls outside the range a sampled set covers."""
