"""Exception hierarchy shared by every module."""


class OneSidedError(Exception):
    """Base class for all errors raised by :mod:`onesided`."""


class DomainError(OneSidedError, ValueError):
    """Input outside the domain of an operation (bad interval, grid mismatch, ...)."""


class ParameterError(OneSidedError, ValueError):
    """Numeric parameter outside its admissible range."""


class ModeError(OneSidedError, ValueError):
    """Enumeration mode cannot handle the input size."""


class RangeError(OneSidedError, OverflowError):
    """Evaluation would overflow double precision."""


class KernelError(OneSidedError, ValueError):
    """Kernel specification cannot be evaluated where required."""


class RegressionError(OneSidedError, ValueError):
    """Degenerate data handed to a regression sweep."""


class SpecError(OneSidedError, ValueError):
    """Malformed mini-language or configuration string."""


class ConsistencyError(OneSidedError, ArithmeticError):
    """Two independent evaluations of the same quantity disagree."""
