from typing import Optional


class MbsvmError(Exception):
    """Base class for every error raised by the library."""


class DatasetParseError(MbsvmError, ValueError):
    """A LIBSVM file could not be read; ``line_number`` is None when no single line is at fault."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message if line_number is None else f"line {line_number}: {message}")
        self.line_number = line_number


class DegenerateDataError(MbsvmError, ValueError):
    pass


class DimensionError(MbsvmError, IndexError):
    pass


class DomainError(MbsvmError, ValueError):
    """An argument lies outside the range an operation is defined on."""


class FeasibilityError(MbsvmError, ValueError):
    """A dual vector left the box [0, 1]^n."""


class ConfigError(MbsvmError, ValueError):
    pass
