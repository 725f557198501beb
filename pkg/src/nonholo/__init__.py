"""Nonholonomic rigid-body flows on so(n) with verified invariant measures."""

from . import ball3d, elpr, elr, errors, liealg, numerics, veselova

__version__ = "0.1.0"

__all__ = [
    "ball3d",
    "elpr",
    "elr",
    "errors",
    "liealg",
    "numerics",
    "veselova",
    "__version__",
]
