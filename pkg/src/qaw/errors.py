"""Exception hierarchy shared by every module."""


class QawError(Exception):
    """Base class for all library errors."""


class ParameterError(QawError, ValueError):
    """Invalid input: wrong length, out-of-range index, bad base, etc."""


class PoleProximityError(QawError, ArithmeticError):
    """An evaluation point sits within the guard distance of a pole or theta zero."""


class DivergenceError(QawError, ArithmeticError):
    """A series or integral is outside its domain of convergence."""


class ConvergenceError(QawError, ArithmeticError):
    """A convergent computation exhausted its term or doubling budget."""


class UnsupportedDomainError(QawError):
    """The requested identity relates integrals outside every supported evaluator's domain."""
