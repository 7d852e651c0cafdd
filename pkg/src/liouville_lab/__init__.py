"""Numerical laboratory for singular Liouville equations on compact surfaces."""

from .errors import (
    ConfigurationError,
    LabError,
    NumericalBlowupError,
    PreconditionError,
    ProjectionDomainError,
    ResolutionError,
    ThresholdError,
)
from .surface import Surface, build_surface, parse_surface_spec

__version__ = "0.1.0"
