"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when inputs describe an impossible or rejected configuration."""


class StateError(RuntimeError):
    """Raised when on-disk state conflicts with the requested operation."""
