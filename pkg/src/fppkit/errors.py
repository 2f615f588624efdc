"""Exception types. Each maps to a CLI exit code."""


class FppError(Exception):
    exit_code = 1


class ConfigError(FppError, ValueError):
    """Malformed or invalid configuration (distribution, window, grid, keys)."""

    exit_code = 2

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{loc}: {message}"
        super().__init__(message)


class PreconditionError(FppError, ValueError):
    """An operation was called outside its documented domain."""

    exit_code = 3


class NegativeWeightError(PreconditionError):
    """A shortest-path operation received an environment with negative weights."""


class InconclusiveError(FppError):
    """A check could not reach a verdict (e.g. hop bound too small)."""

    exit_code = 4
