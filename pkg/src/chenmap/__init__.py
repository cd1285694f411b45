"""Numerical verification of Chen-type curvature inequalities for Riemannian maps."""

from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.errors import ChenmapError

__version__ = "0.1.0"

__all__ = ["DEFAULT_TOLERANCES", "Tolerances", "ChenmapError", "__version__"]
