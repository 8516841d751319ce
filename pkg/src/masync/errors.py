class MasyncError(Exception):
    """Base class for all errors raised by masync."""


class InvalidParameterError(MasyncError, ValueError):
    pass


class InsufficientCapacityError(MasyncError):
    """Raised when a clip cannot host a single complete code.

    The partial embedding record is attached so callers can inspect what
    (if anything) was changed.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class WavFormatError(MasyncError):
    pass


class ExternalToolMissing(MasyncError):
    pass
