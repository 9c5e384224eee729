"""Exception hierarchy.

Numerical failures map to CLI exit code 1, configuration problems to 2.
"""


class NumericalError(Exception):
    """Base class for failures caused by the numbers themselves."""


class NotPositiveDefinite(NumericalError):
    pass


class NonSymmetric(NumericalError):
    pass


class IndefiniteMatrix(NumericalError):
    pass


class DimensionMismatch(NumericalError):
    pass


class AllZeroData(NumericalError):
    pass


class EmptyBasis(NumericalError):
    pass


class DegenerateSystem(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class InsufficientRank(NumericalError):
    pass


class ConfigError(ValueError):
    """Invalid user configuration (bad flag combination, unknown key...)."""
