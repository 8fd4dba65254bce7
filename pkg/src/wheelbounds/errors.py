"""Exception hierarchy shared by every wheelbounds module."""


class WheelBoundsError(Exception):
    """Base class of all errors raised by wheelbounds."""


class ValidationError(WheelBoundsError, ValueError):
    """Inputs violate a documented precondition; the CLI maps it to exit code 2."""


class NonPositiveError(ValidationError):
    """A modulus that must be strictly positive is not."""


class UnorderedError(ValidationError):
    """Material moduli are not in ascending order."""


class OutOfSimplexError(ValidationError):
    """Volume fractions leave the simplex m_i >= 0, m1 + m2 + m3 = 1."""


class DegenerateFractionsError(ValidationError):
    """Fractions for which the requested quantity does not exist (e.g. pure ideal phase)."""


class ConeViolationError(ValidationError):
    """A field state (s, d) lies outside the cone s^2 >= d^2."""


class InfeasibleFractionsError(ValidationError):
    """No wheel geometry exists for the requested fractions."""


class RegimeMismatchError(ValidationError):
    """An operation restricted to one regime was called for another."""


class ResolutionTooCoarseError(ValidationError):
    """A rasterization cannot meet its area tolerance at the requested resolution."""


class SingularProfileError(ValidationError):
    """A radial profile has a zero-measure segment or a non-positive coefficient."""


class BadContrastError(ValidationError):
    """The finite stand-in for the ideal phase is not larger than k2."""


class BadModuliError(ValidationError):
    """Engineering moduli outside their admissible range."""


class ComputationError(WheelBoundsError, RuntimeError):
    """A numerical procedure failed on valid input."""


class NoConvergenceError(ComputationError):
    """An iterative solver hit its iteration cap."""


class IllConditionedFitError(ComputationError):
    """An extrapolation design matrix is rank deficient or badly conditioned."""


class VerificationFailedError(WheelBoundsError):
    """A numerical verification ran to completion but missed its tolerance; the CLI maps it to exit code 3."""
