"""Exception types raised across the package."""


class FeeSettingError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FeeSettingError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(FeeSettingError, ArithmeticError):
    """A query hit a point where the quantity is undefined (zero density, F = 1)."""


class RangeError(FeeSettingError, ValueError):
    """A target value lies outside the range of a monotone map being inverted."""


class PreconditionError(FeeSettingError, ValueError):
    """A distributional precondition (regularity, MHR, support) does not hold."""


class ConfigurationError(FeeSettingError, ValueError):
    """Invalid numerical configuration (resolution, sample count, tolerance)."""


class EquilibriumNotFound(FeeSettingError, ArithmeticError):
    """No bracketing root of the seller's equilibrium condition was found."""


class ConsistencyError(FeeSettingError, ArithmeticError):
    """A computed object violates a structural invariant (e.g. monotonicity)."""


class AccuracyError(FeeSettingError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""
