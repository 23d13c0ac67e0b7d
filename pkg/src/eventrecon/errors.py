"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class EventReconError(Exception):
    """Base class for all package errors."""


class InputError(EventReconError, ValueError):
    """Caller supplied data that violates an operation's preconditions."""


class ParseError(InputError):
    """A text file could not be parsed.

    ``line`` is the 1-based line number of the offending record, or None
    when the failure is not tied to a single line.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(InputError):
    """A binary or image file has an unsupported layout."""


class ConfigurationError(InputError):
    """Flags, config files or keyframe sets are inconsistent."""


class WellPosednessError(InputError):
    """A fit was requested on data that cannot determine the parameters."""
