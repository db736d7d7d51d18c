"""Closed relativistic strings: exact evolution, gauge normalization,
variational diagnostics, wiggly approximation and planar collapse."""

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .curves import (
    AnalyticLoop,
    PeriodicLoop,
    PiecewiseLinearLoop,
    SplineLoop,
    arclength_reparametrize,
    circle_loop,
    ellipse_loop,
    periodic_interpolate,
    total_length,
)
from .dalembert import (
    ConstraintMode,
    DAlembertPair,
    StringState,
    collapse_time_map,
    decompose,
    detect_collapse,
    evaluate_state,
    singular_set,
)
from .errors import RelStringError

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOLERANCES",
    "ToleranceConfig",
    "AnalyticLoop",
    "PeriodicLoop",
    "PiecewiseLinearLoop",
    "SplineLoop",
    "arclength_reparametrize",
    "circle_loop",
    "ellipse_loop",
    "periodic_interpolate",
    "total_length",
    "ConstraintMode",
    "DAlembertPair",
    "StringState",
    "collapse_time_map",
    "decompose",
    "detect_collapse",
    "evaluate_state",
    "singular_set",
    "RelStringError",
    "__version__",
]
