"""Exception hierarchy shared by the library and the command line."""


class VDLabError(Exception):
    """Base class for every error raised by vdlab."""

    exit_code = 1


class InputError(VDLabError, ValueError):
    """Bad argument, configuration value or precondition violation."""

    exit_code = 2


class StateError(VDLabError):
    """The physical state left its admissible set (e.g. nonpositive density)."""

    exit_code = 3

    def __init__(self, message, t=None, where=None):
        super().__init__(message)
        self.t = t
        self.where = where


class SnapshotError(VDLabError, OSError):
    """Corrupt, truncated or incompatible file on disk."""

    exit_code = 4

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataFormatError(VDLabError, OSError):
    """Malformed text input such as a series CSV; carries the offending line."""

    exit_code = 4

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line
