"""Metric geometry toolkit for isodiametric stability in constant curvature."""
from .geometry_core import Hyperplane, Kind, Space, space
from .kernels import BACKEND

__all__ = ["Hyperplane", "Kind", "Space", "space", "BACKEND"]
__version__ = "0.1.0"
