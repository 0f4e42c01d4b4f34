"""Riemann extensions of affine connections, curvature with exact derivatives,
geodesic integration, and the anti-Mach closed-form and translation-surface checks."""

from .errors import (
    ConfigError,
    DerivativeUnsupported,
    DimensionMismatch,
    DomainError,
    GeometryError,
    IllConditioned,
    NonFiniteState,
    SingularMetric,
    StepSizeUnderflow,
)
from .extension import ExtendedChart, ExtendedMetric, extend, extended_signature
from .geodesic import GeodesicClass, GeodesicState, InitialData, Trajectory, conserved_norm, geodesic_rhs, integrate
from .geometry import (
    ChartPoint,
    ConnectionField,
    CurvatureReport,
    LeviCivitaConnection,
    MetricField,
    christoffel,
    kretschmann,
    levi_civita,
    ricci_tensor,
    riemann_tensor,
)

__version__ = "0.1.0"
