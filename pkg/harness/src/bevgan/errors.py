"""Exception types for the training harness."""


class BevGanError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(BevGanError):
    """A configuration value or combination is invalid."""


class DataError(BevGanError):
    """An input file or image is missing, malformed, or mismatched."""
