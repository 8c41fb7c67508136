"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: DomainError/ContractError and friends
are user errors (exit 1), ImageIOError is an I/O failure (exit 2).
"""


class CswarpError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CswarpError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ContractError(CswarpError, ValueError):
    """A precondition on shapes, sizes, or operation compatibility failed."""


class DegenerateInputError(DomainError):
    """Geometric input is degenerate (too few points, collinear, ...)."""


class SolverError(CswarpError, RuntimeError):
    """The linear system could not be solved, even after jitter escalation."""


class UnsupportedDiagnosticError(ContractError):
    """A diagnostic was requested for a model that does not define it."""


class DivergenceError(CswarpError, RuntimeError):
    """The optimizer produced a non-finite loss."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ImageIOError(CswarpError, OSError):
    """An image or field file could not be read or written."""
