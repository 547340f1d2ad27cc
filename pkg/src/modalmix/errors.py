"""Exception types shared across the package."""


class ModalMixError(Exception):
    """Base class for every error this package raises on purpose."""


class NotPositiveDefinite(ModalMixError):
    """A matrix required to be symmetric positive definite is not."""


class DimensionMismatch(ModalMixError, ValueError):
    """Inputs disagree on dimensionality."""


class LengthMismatch(ModalMixError, ValueError):
    """Paired sequences differ in length."""


class DegenerateData(ModalMixError):
    """The data cannot support the requested fit."""


class AscentViolation(ModalMixError):
    """Density decreased along an ascent trajectory.

    The fixed-point iteration is an ascent map, so a genuine decrease beyond
    rounding slack signals a bug, not a data condition.
    """


class UnresolvedTrajectory(ModalMixError):
    """No trajectory resolved to a mode, so labels cannot be produced."""


class UnknownScenario(ModalMixError, KeyError):
    """Requested synthetic scenario name is not registered."""


class InvalidArgument(ModalMixError, ValueError):
    """An argument value is outside the supported range."""
