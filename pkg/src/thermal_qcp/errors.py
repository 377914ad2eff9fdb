"""Exception hierarchy shared by all modules."""


class ThermalQCPError(Exception):
    """Base class for package errors."""


class DomainError(ThermalQCPError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(ThermalQCPError, RuntimeError):
    """An iterative solver failed to converge.

    Parameters
    ----------
    message : str
        Human readable description.
    residuals : sequence of float, optional
        History of the update norm, newest last.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = tuple(residuals)


class QuadratureError(ThermalQCPError, RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message, error_estimate=None, params=None):
        super().__init__(message)
        self.error_estimate = error_estimate
        self.params = params


class NumericalInconsistencyError(ThermalQCPError, ArithmeticError):
    """Computed quantities violate a constraint they must satisfy."""


class SymmetryViolationError(ThermalQCPError, AssertionError):
    """A matrix element forbidden by symmetry is nonzero."""


class ModelPointError(ThermalQCPError, RuntimeError):
    """Evaluation of a model failed at a specific parameter point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
