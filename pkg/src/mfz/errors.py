"""Exception hierarchy.

Errors deriving from ``ValueError`` signal bad input (the CLI maps them to exit
status 2); the remaining ``MfzError`` subclasses are computational failures
(exit status 1).
"""


class MfzError(Exception):
    pass


class BadDimensions(MfzError, ValueError):
    pass


class NotAProbabilityVector(MfzError, ValueError):
    pass


class NotRegular(MfzError, ValueError):
    pass


class NotABarrier(MfzError, ValueError):
    pass


class DegenerateWord(MfzError, ValueError):
    pass


class NotSquare(MfzError, ValueError):
    pass


class NegativeEntry(MfzError, ValueError):
    pass


class NotConcave(MfzError, ValueError):
    pass


class BadSampleCount(MfzError, ValueError):
    pass


class BudgetExceeded(MfzError):
    """An atom level or word enumeration would exceed the configured budget."""


class NoBarrier(MfzError):
    """The support is too long (xi >= 2) for any barrier digit to exist."""


class BarrierNotFound(MfzError):
    pass


class Unresolved(MfzError):
    """Finite-k brackets are too wide to decide the requested question."""
