"""Semantic exception hierarchy shared by all modules."""


class LagsieveError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LagsieveError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedDegreeError(DomainError):
    """A polynomial degree above the documented stability ceiling."""


class DivergentIntegralError(DomainError):
    """A requested integral does not converge (e.g. tilt rate <= -1)."""


class DegenerateProjectionError(LagsieveError):
    """Projection coefficients are numerically zero; no direction to normalize."""


class QuadratureAccuracyError(LagsieveError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the achieved estimate and its error bound so callers can decide
    whether the partial answer is still usable.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate!r}, error_bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


class ValidationError(LagsieveError, ValueError):
    """Invalid observation, configuration, or input file."""


class DegenerateFitError(LagsieveError):
    """Every optimizer start was stuck at the likelihood floor."""


class DegenerateNormalizerError(LagsieveError):
    """Exposure-window normalizer is undefined (window of length <= 0)."""
