"""Exception hierarchy shared by the library and the CLI."""


class NPIError(Exception):
    """Base class for all package errors."""


class ValidationError(NPIError, ValueError):
    """A parameter violates a type invariant (bad strike, horizon, seed...)."""


class DataError(NPIError, ValueError):
    """Input price data is malformed or inconsistent."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class LadderError(DataError):
    """Boundary returns do not bracket the sampled returns."""


class CapacityError(NPIError):
    """Exact enumeration was requested above the configured cap."""
