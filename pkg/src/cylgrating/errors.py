"""Exception types raised by the grating solvers."""


class GratingError(Exception):
    """Base class for every numerical or configuration failure in the package."""


class DomainError(GratingError, ValueError):
    """Argument outside the domain of a special function (e.g. Y_n at x = 0)."""


class EvanescentInterior(GratingError, ValueError):
    """The wave inside the rods would be evanescent (eps_r * mu_r <= cos^2 theta_i)."""


class InvalidParameters(GratingError, ValueError):
    """Physical parameters violate an invariant (overlapping rods, bad angle, ...)."""


class SingularDenominator(GratingError, ArithmeticError):
    """The isolated-rod denominator of a coefficient vanishes (rod resonance)."""


class WoodAnomaly(GratingError, ValueError):
    """A diffraction order sits exactly at grazing emergence; the lattice sums diverge."""


class NoConvergence(GratingError, ArithmeticError):
    """An iterative process or accelerated series failed to reach its tolerance.

    Attributes
    ----------
    history : list
        Diagnostic trail (partial estimates or contraction ratios).
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class PreconditionViolated(GratingError, ValueError):
    """A formula was requested outside the regime where it is defined."""


class IllConditioned(GratingError, ArithmeticError):
    """Linear system too ill-conditioned to trust its solution."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class TruncationNotConverged(GratingError, ArithmeticError):
    """A truncated infinite series/system changed by more than the tolerance."""


class InteriorPoint(GratingError, ValueError):
    """Field requested inside a rod, where the exterior expansion does not apply."""


class ConfigError(GratingError, ValueError):
    """Malformed or incomplete run configuration."""
