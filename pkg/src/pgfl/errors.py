"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: InputError -> 2, NumericalError -> 3,
file/format problems (FileFormatError, OSError) -> 4.
"""


class PgflError(Exception):
    """Base class for all package errors."""


class InputError(PgflError, ValueError):
    """Invalid argument: bad dimensions, out-of-range parameters, etc."""


class NumericalError(PgflError, RuntimeError):
    """A solver failed to converge or a numerical routine broke down.

    Carries optional context (residual, duality gap, iteration count).
    """

    def __init__(self, message, residual=None, gap=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.gap = gap
        self.iterations = iterations


class FileFormatError(PgflError, ValueError):
    """Malformed input file; message includes the offending line when known."""
