"""Exception hierarchy shared by all modules."""


class WeakPerfError(Exception):
    """Base class for every error raised by the package."""


class DomainError(WeakPerfError, ValueError):
    """An argument lies outside the range where a formula is valid."""


class ConstructionError(WeakPerfError):
    """A set, length sequence or disc tree could not be built."""

    def __init__(self, message, *, level=None, annulus=None):
        super().__init__(message)
        self.level = level
        self.annulus = annulus


class ConfigError(WeakPerfError):
    """Malformed or out-of-range experiment configuration."""


class ValidationError(WeakPerfError):
    """A certificate was requested without a passing validation."""
