"""Numerical toolkit for the Dunkl Laplacian: root systems, potential theory,
radial semilinear problems and Monte Carlo simulation of the Dunkl process."""

from .errors import DunklLabError, ValidationError
from .phi import PhiSpec
from .roots import RootSystemData, build_root_system, parse_system

__all__ = ["DunklLabError", "ValidationError", "PhiSpec", "RootSystemData", "build_root_system", "parse_system"]
__version__ = "0.1.0"
