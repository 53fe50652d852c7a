"""Exception hierarchy shared by all modules."""


class UpmixError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(UpmixError, ValueError):
    """Array shapes or channel counts do not match what an operation needs."""


class ValidationError(UpmixError, ValueError):
    """A value is out of its admissible domain (NaN, non-unit vector, ...)."""


class WavParseError(UpmixError):
    """A RIFF/WAVE file is malformed. ``chunk`` names the offending chunk."""

    def __init__(self, message, chunk=None):
        super().__init__(message)
        self.chunk = chunk


class UnsupportedFormatError(UpmixError):
    """The WAV format code or bit depth is not supported."""


class DivergenceError(UpmixError, ArithmeticError):
    """The sparse solver produced a non-finite loss."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
