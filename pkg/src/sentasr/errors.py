"""Exception types shared across the package."""


class SentasrError(Exception):
    """Base class for package errors."""


class FileFormatError(SentasrError):
    """Bad magic, version mismatch, truncated payload, unsupported encoding."""


class ManifestError(SentasrError):
    """Malformed manifest line or missing referenced file."""


class ConfigError(SentasrError):
    """Invalid configuration value or file."""


class NumericsError(SentasrError):
    """Non-finite values, failed gradient checks, shape mismatches."""
