"""Exception hierarchy shared by every module."""


class InfoCorrError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(InfoCorrError, ValueError):
    pass


class NotNormalized(InfoCorrError, ValueError):
    pass


class ParseError(InfoCorrError, ValueError):
    """A distribution or config file could not be parsed."""


class DomainError(InfoCorrError, ValueError):
    """A closed-form formula was called outside its domain."""


class UnsupportedSupport(InfoCorrError, ValueError):
    pass


class OptimizerBudgetExhausted(InfoCorrError, RuntimeError):
    """Raised only in strict mode; otherwise results carry a non-certified flag."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class EnumerationCapExceeded(InfoCorrError, RuntimeError):
    pass


class InconsistentDecomposition(InfoCorrError, ValueError):
    pass
