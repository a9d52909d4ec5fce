"""Exception types raised across the package."""


class OffFSPError(Exception):
    """Base class for all package errors."""


class PreconditionError(OffFSPError, ValueError):
    """An operation was called on a state where it is undefined."""


class IllegalActionError(OffFSPError, ValueError):
    """An action id is not legal at the state it was applied to."""


class MissingInfostateError(OffFSPError, KeyError):
    """A strict policy was queried at an infostate it does not define."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing infostate"


class DegenerateDatasetError(OffFSPError, ValueError):
    """All resampling weights are zero (target opponent entirely off-support)."""


class DatasetFormatError(OffFSPError, ValueError):
    """A dataset file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(OffFSPError, ValueError):
    """Data or configuration does not match the game or schema it claims."""
