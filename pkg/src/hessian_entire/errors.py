"""Exception hierarchy shared by every module of the package."""


class HessianEntireError(Exception):
    """Base class for all package errors."""


class DomainError(HessianEntireError, ValueError):
    """Argument outside the domain where a function is defined."""


class ValidationError(HessianEntireError, ValueError):
    """Problem data violate a structural assumption (monotonicity, k <= n, ...)."""


class ConvergenceError(HessianEntireError, ArithmeticError):
    """An iterative method failed to bracket or converge."""


class QuadratureError(HessianEntireError, ArithmeticError):
    """Adaptive quadrature exhausted its panel budget."""


class RangeError(HessianEntireError, ValueError):
    """Requested value lies beyond the supremum of a bounded monotone map."""


class FluxSaturation(HessianEntireError):
    """The required flux reached the finite limit of g(p) = p A(p)."""

    def __init__(self, q, limit):
        super().__init__(f"flux {q!r} is not below the flux limit {limit!r}")
        self.q = q
        self.limit = limit


class StepCollapse(HessianEntireError, ArithmeticError):
    """Step size fell below the floor without a termination verdict."""

    def __init__(self, message, r=None, h=None, diagnostics=None):
        super().__init__(message)
        self.r = r
        self.h = h
        self.diagnostics = diagnostics or {}


class InterpolationError(HessianEntireError, ValueError):
    """Query outside the sampled range of a solution."""
