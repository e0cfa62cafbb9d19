"""Certified experiments for approximation on affine subspaces."""

from .core import AffineSubspaceSpec, ApproxFunction, Ball, HattedVector
from .exactreal import ExactReal, parse_real
from .intervalmath import DEFAULT_BITS, Interval, PrecisionExhausted

__version__ = "0.1.0"

__all__ = [
    "AffineSubspaceSpec",
    "ApproxFunction",
    "Ball",
    "HattedVector",
    "ExactReal",
    "parse_real",
    "DEFAULT_BITS",
    "Interval",
    "PrecisionExhausted",
    "__version__",
]
