"""Exception hierarchy shared by every module.

Numerical failures derive from :class:`NumericalError` and configuration
problems from :class:`ConfigError`; the CLI maps them to exit codes 2 and 1.
"""


class OjaSdeError(Exception):
    pass


class NumericalError(OjaSdeError):
    pass


class ConfigError(OjaSdeError, ValueError):
    pass


class DimMismatch(OjaSdeError, ValueError):
    pass


class NonSquare(DimMismatch):
    pass


class ExcessiveAsymmetry(NumericalError, ValueError):
    pass


class NotPSD(NumericalError):
    pass


class NonFiniteEvaluation(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class SingularState(NumericalError):
    pass


class NotOnManifold(NumericalError):
    pass


class ColumnsNotOrthonormal(NotOnManifold):
    pass


class StabilityViolation(NumericalError):
    """Raised when a trajectory breaks the Frobenius growth bound."""

    def __init__(self, message, step=None, path=None):
        super().__init__(message)
        self.step = step
        self.path = path


class NonZeroMean(ConfigError):
    pass


class UnboundedSupport(ConfigError):
    pass


class WrongDimension(ConfigError):
    pass


class UnknownPotential(ConfigError):
    pass


class NegativeEta(ConfigError):
    pass


class NoiseDegenerate(NumericalError):
    pass


class NotPeriodic(NumericalError):
    pass


class CflViolation(NumericalError):
    pass


class ZeroDensityCell(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    """Config validation failure; ``key`` names the offending key path."""

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
