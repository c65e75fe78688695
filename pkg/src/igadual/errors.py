"""Exception types shared across the library.

Parameter and domain problems are ``ValueError`` subclasses so that plain
argument checking still behaves as expected for callers that only catch the
builtin; the numerical failures derive from ``ArithmeticError``.
"""


class ParameterError(ValueError):
    """Invalid argument combination (degree, counts, shapes, config keys)."""


class DomainError(ValueError):
    """Evaluation point outside the parametric domain."""


class GeometryError(ArithmeticError):
    """Degenerate geometry, e.g. nonpositive Jacobian at a quadrature point."""


class NumericalError(ArithmeticError):
    """Numerical procedure failed to reach its stated tolerance."""


class ConstructionError(NumericalError):
    """A basis construction did not meet its residual target.

    Raised by the approximate-inverse builder when the requested band is too
    small to satisfy polynomial duality.
    """


class ConvergenceError(NumericalError):
    """Iterative solve did not converge; carries the residual history."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = [] if residuals is None else list(residuals)


class DivergenceError(NumericalError):
    """A time integration blew up; carries the step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
