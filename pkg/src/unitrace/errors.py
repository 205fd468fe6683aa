"""Exception hierarchy.

The CLI maps each family to a stable exit code, so new errors should
subclass one of the three families rather than ``UnitraceError`` itself.
"""

from __future__ import annotations


class UnitraceError(Exception):
    """Base class for every error raised by the package."""


# -- input errors (exit 2) --------------------------------------------------


class InputError(UnitraceError):
    """The input data could not be read or violates a dataset invariant."""


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridError(InputError):
    """Timestamps do not form a regular grid."""


class DuplicateError(InputError):
    """The same (series_id, timestamp) pair appears twice."""


# -- parameter errors (exit 3) ----------------------------------------------


class ParameterError(UnitraceError):
    """A caller-supplied parameter is invalid for the given data."""


class BoundsError(ParameterError, IndexError):
    """A window does not fit inside the series."""


class UnknownSeriesError(ParameterError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class ConfigError(ParameterError, ValueError):
    pass


class DegenerateInputError(ParameterError, ValueError):
    """Statistic undefined for the input (zero variance, nothing present)."""


class ShapeError(ParameterError, ValueError):
    pass


# -- alignment errors (exit 4) ----------------------------------------------


class AlignmentError(UnitraceError):
    """Two time series share no common time range."""
