"""Exception types raised by popmatch."""


class PopmatchError(Exception):
    """Base class for all library errors."""


class InstanceError(PopmatchError, ValueError):
    """An instance or matching violates the model invariants."""


class ParseError(InstanceError):
    """Malformed input text, optionally with a source position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class InvalidMatchingError(InstanceError):
    pass


class NotMaximumError(PopmatchError, ValueError):
    """A matching passed as maximum admits an augmenting path."""


class IncompleteListsError(PopmatchError, ValueError):
    pass


class SizeLimitError(PopmatchError):
    """Input too large for an exponential-time routine."""


class NotPopularError(PopmatchError, ValueError):
    pass


class SwitchingError(PopmatchError, ValueError):
    pass


class ConsistencyError(PopmatchError, AssertionError):
    """An internal identity failed; indicates a bug rather than bad input."""


class NoPopularMatchingError(PopmatchError):
    """The requested construction only exists when a popular matching does."""
