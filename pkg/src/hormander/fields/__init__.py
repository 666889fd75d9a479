"""Symbolic side: polynomial vector fields, brackets and Hörmander/Métivier indices."""

from .exact import exact_det, exact_rank, float_rank
from .indices import (
    BasisEntry,
    CommutatorBasis,
    HormanderError,
    PointIndices,
    capital_lambda,
    capital_lambda_terms,
    enumerate_commutators,
    evaluate_basis,
    lambda_I,
    metivier_condition_check,
    metivier_index,
    nu_via_determinants,
    point_indices,
)
from .polynomial import Polynomial, as_fraction
from .smooth import SmoothCoefficient, coordinate_symbols
from .vector import FieldSystem, VectorFieldExpr, bracket, constant_field

__all__ = [
    "BasisEntry",
    "CommutatorBasis",
    "FieldSystem",
    "HormanderError",
    "PointIndices",
    "Polynomial",
    "SmoothCoefficient",
    "VectorFieldExpr",
    "as_fraction",
    "bracket",
    "capital_lambda",
    "capital_lambda_terms",
    "constant_field",
    "coordinate_symbols",
    "enumerate_commutators",
    "evaluate_basis",
    "exact_det",
    "exact_rank",
    "float_rank",
    "lambda_I",
    "metivier_condition_check",
    "metivier_index",
    "nu_via_determinants",
    "point_indices",
]
