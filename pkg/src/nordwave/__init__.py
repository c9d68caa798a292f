"""Spectral solvers and diagnostics for the damped cubic wave equation on T^3."""

from . import spectral
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["spectral", "BACKEND", "__version__"]
