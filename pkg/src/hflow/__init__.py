"""Locally constrained curvature flows of star-shaped hypersurfaces in
hyperbolic space: curvature extraction on radial graphs, quermassintegral
and weighted-curvature-integral functionals, explicit flow integration with
conservation/monotonicity monitors, and inequality verification."""

from ._compat import HAVE_NUMBA, USE_NUMBA
from .errors import (
    ConeViolation,
    ConfigError,
    DegenerateMetric,
    FlowBlowUp,
    GridResolutionError,
    HFlowError,
    InvalidInput,
    InvalidShape,
    NeedsMoreSamples,
    NotStarShaped,
)

__version__ = "0.1.0"
