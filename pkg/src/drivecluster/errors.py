"""Exception hierarchy shared by all pipeline stages."""

from __future__ import annotations


class DriveClusterError(Exception):
    """Base class for every error raised by this package."""


class ParseError(DriveClusterError, ValueError):
    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class OrderingError(ParseError):
    """Timestamps in a session log are not strictly increasing."""


class SchemaError(ParseError):
    """A session log header lacks required columns."""


class SpecValidationError(DriveClusterError, ValueError):
    """A FleetSpec or RunConfig holds out-of-range or unknown entries."""


class InsufficientDataError(DriveClusterError, ValueError):
    pass


class EmptyInputError(InsufficientDataError):
    pass


class NoDataError(InsufficientDataError):
    pass


class DegenerateRangeError(DriveClusterError, ValueError):
    pass


class EmptyHistogramError(InsufficientDataError):
    def __init__(self, message: str, *, user_id: str | None = None):
        super().__init__(f"user {user_id}: {message}" if user_id is not None else message)
        self.user_id = user_id


class BinRangeError(DriveClusterError, ValueError):
    """A value falls outside the [lo, hi] span of a bin specification."""


class InfeasibleError(DriveClusterError, ValueError):
    pass


class DomainError(DriveClusterError, ValueError):
    pass


class AlignmentError(DriveClusterError, ValueError):
    pass


class EmptySampleError(InsufficientDataError):
    pass
