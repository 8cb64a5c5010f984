"""Exception types raised by the library."""


class SuperradError(Exception):
    """Base class for all library errors."""


class DomainError(SuperradError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class OutOfRangeError(SuperradError, ValueError):
    """Argument inside the domain but outside the supported range."""


class ResolutionError(SuperradError, ValueError):
    """Sampling grid too coarse for the requested accuracy or stability."""


class NumericalError(SuperradError, ArithmeticError):
    """A numerical procedure did not reach its tolerance."""


class ConvergenceError(NumericalError):
    """Series failed to converge within its term budget.

    Carries the partial sum reached and the bound on what was left out.
    """

    def __init__(self, message, partial_sum=None, bound=None):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.bound = bound
