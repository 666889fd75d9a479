"""Spectral analysis of sub-Laplacians built from Hörmander vector fields."""

from . import fields
from .fields import FieldSystem, VectorFieldExpr, bracket, enumerate_commutators

__version__ = "0.1.0"

__all__ = ["fields", "FieldSystem", "VectorFieldExpr", "bracket", "enumerate_commutators", "__version__"]
