"""Exception types raised across the package."""


class LedFtError(Exception):
    """Base class for all package errors."""


class ConfigError(LedFtError, ValueError):
    """Invalid or inconsistent configuration values."""


class InvalidConfigError(ConfigError):
    pass


class UnknownIdError(LedFtError, KeyError):
    pass


class DegeneratePoseError(LedFtError, ValueError):
    """Emitter and receiver (nearly) coincide."""


class InvalidRangeError(LedFtError, ValueError):
    pass


class OverloadError(LedFtError, RuntimeError):
    """Displacement beyond what the flexure can physically reach."""


class InfeasibleScheduleError(LedFtError, ValueError):
    pass


class InvalidWidthError(LedFtError, ValueError):
    pass


class InsufficientFramesError(LedFtError, ValueError):
    pass


class EmptyOutputError(LedFtError, ValueError):
    pass


class ShapeMismatchError(LedFtError, ValueError):
    pass


class DivergenceError(LedFtError, RuntimeError):
    """Training loss became non-finite."""


class DegenerateTruthError(LedFtError, ValueError):
    pass


class DataFormatError(LedFtError, ValueError):
    """A data file does not follow the expected CSV schema."""
