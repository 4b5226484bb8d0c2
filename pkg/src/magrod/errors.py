"""Exception hierarchy shared by every module.

The CLI prints the class name of a caught :class:`RodError` verbatim, so the
names below are part of the command-line contract.
"""


class RodError(Exception):
    """Base class for domain errors."""


class SingularState(RodError):
    """State lies on (or too close to) the polar singularity sin(theta) = 0."""


class NegativeRadicand(RodError):
    """mu - 2 nu p_psi is not positive at the evaluated state."""


class ZeroScale(RodError):
    """The twisting moment p_phi is zero, so no dimensionless scaling exists."""


class SingularityReached(RodError):
    """An integration ran into a state where the vector field is undefined."""


class StepUnderflow(RodError):
    """The adaptive integrator could not take a step above round-off level."""


class NoConvergence(RodError):
    """Newton iteration did not reach its tolerance."""


class SingularJacobian(RodError):
    """Newton iteration met a numerically singular Jacobian."""


class DefectiveMatrix(RodError):
    """Eigenvectors are (numerically) linearly dependent."""


class TailTooFat(RodError):
    """Integrand does not decay exponentially at the truncation point."""


class RegimeViolation(RodError):
    """Parameters are outside the small-parameter regime of a construction."""


class NoEquilibrium(NoConvergence):
    """No equilibrium was found near the supplied seed."""


class NotSaddleFocus(RodError):
    """Linearisation spectrum is not of the form +-a +- bi with a > 0."""


class StallOut(RodError):
    """Continuation step size underflowed before the requested length."""


class NoIntersection(RodError):
    """Two section slices do not cross."""


class TangencyDetected(RodError):
    """Two section slices meet at an angle below the transversality tolerance."""

    def __init__(self, message, angle=None):
        super().__init__(message)
        self.angle = angle


class EscapeDetected(RodError):
    """An orbit left the bounded region allowed for a Poincare map."""
