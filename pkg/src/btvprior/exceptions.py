"""Exception hierarchy shared across the package."""


class BtvError(Exception):
    """Base class for all btvprior errors."""


class DomainError(BtvError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(BtvError, ArithmeticError):
    """Adaptive quadrature or an iterative solver failed to converge.

    Attributes
    ----------
    estimate : float
        Best available estimate at the point of failure.
    error : float
        Error bound associated with ``estimate``.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ElicitationError(BtvError):
    """No Beta(alpha, beta) law matches the requested quantiles."""


class ProprietyError(BtvError):
    """Posterior propriety cannot be guaranteed for the data.

    Raised when fewer than two observations are supplied or all of them
    coincide; the location-scale posterior is then improper.
    """


class InitializationError(BtvError):
    """The sampler's starting point has a non-finite log-posterior."""


class FitError(BtvError):
    """Maximum-likelihood optimisation did not converge."""
