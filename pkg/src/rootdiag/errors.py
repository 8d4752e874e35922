"""Shared exception types."""


class ConfigurationError(ValueError):
    """Raised when inputs violate a documented configuration contract."""
