"""Exception hierarchy shared by all modules.

Every error raised on purpose by the package derives from ``TorusgenError``.
Validation problems also derive from ``ValueError`` so that callers treating
bad input generically keep working.
"""


class TorusgenError(Exception):
    """Base class for package errors."""


class ConfigError(TorusgenError, ValueError):
    """Invalid system configuration or input file."""


class DomainError(TorusgenError, ValueError):
    """A parameter lies outside the domain where a quantity is defined."""


class MonotonicityUnavailable(DomainError):
    """Class 1 requested for a gamma above the monotonicity threshold."""


class PreconditionError(TorusgenError, ValueError):
    """A documented precondition of a computation does not hold."""


class AccuracyError(TorusgenError, ArithmeticError):
    """A numerical self-check exceeded its tolerance."""


class NotClosedError(AccuracyError):
    """The return-time search did not close the orbit within ``phi_max``."""


class SmallDivisorError(AccuracyError):
    """A Fourier divisor fell below the configured floor."""


class DissipativityError(TorusgenError, ArithmeticError):
    """The averaged dissipativity coefficient is too small."""

    def __init__(self, message, L=None):
        super().__init__(message)
        self.L = L


class EscapeError(TorusgenError, ArithmeticError):
    """A trajectory left the rectangle where the system is defined."""

    def __init__(self, message, t_exit=None):
        super().__init__(message)
        self.t_exit = t_exit
