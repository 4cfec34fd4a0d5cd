"""Exception types shared across the package."""


class FluctselError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FluctselError):
    """Invalid configuration input (bad key, type, or constraint)."""


class ExtinctionError(FluctselError):
    """Raised when no positive periodic state exists for the requested model."""


class ConvergenceError(FluctselError):
    """Raised when an iteration fails to reach its tolerance within its budget."""


class NumericalError(FluctselError):
    """Raised on numerical breakdown (overflow, empty data, invalid state)."""
