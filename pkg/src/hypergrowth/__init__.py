"""Hyperbolic-growth fits, break tests and takeoff tests for historical GDP tables."""

from .dataset import (
    Observation,
    RegionDataset,
    TimeSeries,
    bundled_benchmarks,
    load_dataset,
    parse_long_csv,
    parse_maddison_horizontal,
    window,
)
from .detection import (
    Thresholds,
    chow_break_test,
    classify_transition,
    find_breakpoints,
    takeoff_test,
)
from .fitting import compare_models, fit_hyperbolic, fit_model
from .models import HyperbolicParams, ModelKind, TakeoffClaim

__version__ = "0.1.0"

__all__ = [
    "HyperbolicParams",
    "ModelKind",
    "Observation",
    "RegionDataset",
    "TakeoffClaim",
    "Thresholds",
    "TimeSeries",
    "bundled_benchmarks",
    "chow_break_test",
    "classify_transition",
    "compare_models",
    "find_breakpoints",
    "fit_hyperbolic",
    "fit_model",
    "load_dataset",
    "parse_long_csv",
    "parse_maddison_horizontal",
    "takeoff_test",
    "window",
]
