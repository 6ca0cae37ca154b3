"""Exception hierarchy shared by all modules."""


class SystolicError(Exception):
    """Base class for errors raised by the package."""


class DomainError(SystolicError, ValueError):
    """Raised when a Hamiltonian is evaluated at the origin."""


class UnsupportedRepresentationError(SystolicError, TypeError):
    """Raised when an operation needs a representation the input does not have."""


class StarShapednessError(SystolicError, ValueError):
    """Raised when a Hamiltonian fails to be positive on the unit sphere."""


class IntegrationError(SystolicError, RuntimeError):
    """Raised when the adaptive integrator cannot continue.

    The attributes ``t`` and ``state`` hold the last accepted time and phase
    point.
    """

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class HypothesisViolatedError(SystolicError):
    """Raised when the commutation hypothesis of the radial comparison fails."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ConventionMismatchError(SystolicError):
    """Raised when two volume estimators disagree beyond their combined error."""


class DegreeCapError(SystolicError):
    """Raised when nested brackets exceed the configured numerator degree."""


class TRangeError(SystolicError, ValueError):
    """Raised when a deformation parameter leaves the admissible range.

    ``t_max`` holds the largest admissible parameter found.
    """

    def __init__(self, message, t_max=None):
        super().__init__(message)
        self.t_max = t_max


class InputError(SystolicError, ValueError):
    """Raised for malformed description files or scenario options."""
