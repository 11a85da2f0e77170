"""Exception types shared across the package."""


class ShortscoreError(ValueError):
    """Base class for all package errors."""


class ParseError(ShortscoreError):
    """A file could not be parsed; the message carries the offending line."""


class ValidationError(ShortscoreError):
    """Input data violates a documented constraint."""


class ConfigError(ShortscoreError):
    """A configuration value is out of its documented range."""


class DivergenceError(ShortscoreError):
    """Training produced a non-finite loss."""
