"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Malformed arguments to a domain operation."""


class Infeasible(RuntimeError):
    """A construction that the procedure cannot carry out."""


class BudgetExceeded(RuntimeError):
    """A configured time or size budget was exhausted."""

    def __init__(self, message, *, where=None):
        super().__init__(message)
        self.where = where


class InternalError(RuntimeError):
    """An invariant that the mathematics guarantees was violated."""
