"""Monotone-operator laboratory."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .errors import (AllInfinite, DimensionError, EmptyGraph, NoConvergence, NotMonotoneError,
                     NotResolvable, UnsupportedValue)
from .operators import DualPair, SampledGraph, ToleranceConfig, DEFAULT_TOL

__all__ = [
    "__version__", "AllInfinite", "DimensionError", "EmptyGraph", "NoConvergence", "NotMonotoneError",
    "NotResolvable", "UnsupportedValue", "DualPair", "SampledGraph", "ToleranceConfig", "DEFAULT_TOL",
]
