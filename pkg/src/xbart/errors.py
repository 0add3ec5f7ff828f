"""Exception types shared across the package."""


class XBARTError(Exception):
    """Base class for all errors raised by this package."""


class DataError(XBARTError):
    """Malformed or unusable input data (bad CSV cell, missing value, shape mismatch)."""


class ConfigError(XBARTError):
    """Invalid hyperparameter or benchmark configuration."""


class ModelFormatError(XBARTError):
    """Model file is corrupt, truncated, or has an unsupported version."""
