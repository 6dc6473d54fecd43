"""Exception hierarchy shared by the pipeline stages and the CLI."""


class EDAError(Exception):
    """Base class for all errors raised by :mod:`edadecomp`."""


class DataError(EDAError, ValueError):
    """Input data violates a precondition (length, rate, format)."""


class NumericalError(EDAError, ArithmeticError):
    """A numerical stage could not produce a valid result."""
