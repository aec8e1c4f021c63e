class SecnomaError(Exception):
    """Base class for all package errors."""


class DimensionError(SecnomaError, ValueError):
    pass


class NotHermitianError(SecnomaError, ValueError):
    pass


class IndefiniteMatrixError(SecnomaError, ValueError):
    pass


class UnattainableEHError(SecnomaError, ValueError):
    """The harvesting target is at or above the saturation power."""


class InfeasibleError(SecnomaError):
    pass


class RandomizationFailure(SecnomaError):
    """No Gaussian-randomization candidate could be made feasible."""


class ConfigError(SecnomaError, ValueError):
    pass
