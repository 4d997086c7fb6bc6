"""Exception types shared across the package.

Everything derives from ValueError so callers that do not care about the
distinction can catch the usual thing.
"""


class ExSpliNetError(ValueError):
    """Base class for all package-specific errors."""


class InvalidHyperparameterError(ExSpliNetError):
    """Basis count, degree, or model shape parameters are inconsistent."""


class OutOfDomainError(ExSpliNetError):
    """An evaluation point lies outside [0, 1] (per coordinate)."""


class DegreeTooLowError(ExSpliNetError):
    """A derivative was requested from a spline whose degree cannot support it."""


class DegenerateWeightsError(ExSpliNetError):
    """A raw inner weight block is entirely zero; the reparameterization is undefined."""


class ShapeMismatchError(ExSpliNetError):
    """Array shapes do not agree with the declared configuration."""


class DataError(ExSpliNetError):
    """Dataset loading or validation failure."""


class SamplingError(ExSpliNetError):
    """Rejection sampling stalled (acceptance rate too low)."""


class ConfigError(ExSpliNetError):
    """Experiment/CLI configuration file is invalid."""
