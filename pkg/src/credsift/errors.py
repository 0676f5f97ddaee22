"""Exception types shared across the package."""


class CredsiftError(Exception):
    """Base class for all credsift errors."""


class DomainError(CredsiftError, ValueError):
    """An operation precondition was violated."""


class ParseError(CredsiftError, ValueError):
    """Malformed input data; carries the offending location when known."""

    def __init__(self, message, *, path=None, line_number=None):
        super().__init__(message)
        self.path = path
        self.line_number = line_number


class UndefinedMetricError(DomainError):
    """A metric has no defined value for the given counts."""


class TransportError(CredsiftError):
    """A remote call failed after all retries; carries the failed chunk index."""

    def __init__(self, message, *, chunk_index=None):
        super().__init__(message)
        self.chunk_index = chunk_index


class ProtocolError(CredsiftError):
    """A remote endpoint replied outside the documented wire protocol."""


class TimingError(CredsiftError):
    """A timed operation raised; carries the measured iteration index."""

    def __init__(self, message, *, iteration):
        super().__init__(message)
        self.iteration = iteration
