"""Exception hierarchy shared by the solver, checkers and CLI."""


class FairDivError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FairDivError, ValueError):
    """Malformed or inconsistent input (bad shapes, sign mismatch, non-ordered instance...)."""


class BudgetExceeded(FairDivError):
    """An exhaustive search would exceed the configured size or time budget."""


class PreconditionError(FairDivError):
    """A procedure's mathematical precondition does not hold for the given input."""


class VerificationError(FairDivError, AssertionError):
    """A solver produced output that failed its own post-check. Always a bug."""
