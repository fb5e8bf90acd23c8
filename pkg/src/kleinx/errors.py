"""Exception hierarchy shared by all modules."""


class KleinxError(Exception):
    """Base class for numerical failures raised by this package."""


class DomainError(KleinxError, ValueError):
    """An argument lies outside the operation's domain."""


class PoleError(KleinxError, ArithmeticError):
    """Evaluation requested too close to a pole of the Weierstrass function."""


class StepUnderflowError(KleinxError):
    """The step-size controller drove the step below the floor."""


class DimensionMismatchError(KleinxError, ValueError):
    pass


class CoordinateSingularityError(KleinxError, ArithmeticError):
    """Spherical chart evaluated at one of its poles."""


class RotationFailureError(KleinxError):
    """The polar angle stopped increasing, so it cannot serve as a time variable."""


class DegenerateZeroError(KleinxError):
    """A function and its derivative vanish together at a detected root."""


class NoCrossingError(KleinxError):
    """No axis crossing was found before the cutoff ordinate."""


class ConvergenceError(KleinxError):
    """A discretised result did not stabilise under grid refinement."""


class UnresolvedZeroError(KleinxError):
    """A sampled zero could not be classified at the grid resolution."""
