"""Exception types raised across the toolkit."""


class GeometryError(Exception):
    """Base class for all toolkit errors."""


class SingularMetric(GeometryError):
    pass


class DerivativeUnsupported(GeometryError):
    pass


class DimensionMismatch(GeometryError, ValueError):
    pass


class StepSizeUnderflow(GeometryError):
    pass


class NonFiniteState(GeometryError):
    pass


class IllConditioned(GeometryError):
    pass


class DomainError(GeometryError, ValueError):
    pass


class ConfigError(GeometryError, ValueError):
    pass
