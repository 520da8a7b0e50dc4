# kherd/exceptions.py
"""Error taxonomy. ConfigurationError maps to exit code 2, NumericalError to 3."""


class HerdingError(Exception):
    """Base class for every error raised by the engine."""


class ConfigurationError(HerdingError, ValueError):
    """Bad configuration, input file or input shape."""


class NumericalError(HerdingError, ArithmeticError):
    """A computation could not be completed."""


# Numerics
class NotPositiveDefinite(NumericalError):
    pass


class NotSymmetric(NumericalError):
    pass


class NonFiniteValue(ConfigurationError):
    pass


class DimensionMismatch(ConfigurationError):
    pass


# Targets and kernels
class EmptyDistribution(ConfigurationError):
    pass


class EmptyInput(ConfigurationError):
    pass


class RaggedRows(ConfigurationError):
    pass


class UnsupportedOrder(ConfigurationError):
    pass


class InvalidMixture(ConfigurationError):
    pass


# Herding
class AscentDiverged(NumericalError):
    pass


class EmptyCandidates(ConfigurationError):
    pass


class EmptyHistory(NumericalError):
    pass


class CacheInconsistency(NumericalError):
    pass


# Evaluation
class EmptySamples(ConfigurationError):
    pass


class DegenerateTrace(NumericalError):
    pass


class KernelMismatch(ConfigurationError):
    pass


# Posterior
class ParseError(ConfigurationError):
    """Unparseable field; `row` is 1-based."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class EmptyFile(ConfigurationError):
    pass


class NonBinaryLabel(ConfigurationError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateData(NumericalError):
    pass


class EmptySet(ConfigurationError):
    pass


class EmptyThetaSet(EmptySet):
    pass


# CLI
class ConfigError(ConfigurationError):
    """Invalid setting; `field` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
