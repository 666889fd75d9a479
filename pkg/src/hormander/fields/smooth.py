"""Non-polynomial coefficients, held as sympy expressions.

These exist for systems such as the bump-function field of the bundled
``example82`` system. They are differentiated symbolically but evaluated
in floating point only, so every index computed from them goes through the
tolerance path.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property

import numpy as np
import sympy

from .polynomial import Polynomial


def coordinate_symbols(nvars: int) -> tuple[sympy.Symbol, ...]:
    return sympy.symbols(f"x1:{nvars + 1}", real=True)


class SmoothCoefficient:
    """A smooth coefficient function given by a sympy expression in x1..xn."""

    exact = False

    def __init__(self, nvars: int, expr):
        self.nvars = nvars
        self.expr = sympy.sympify(expr)

    @classmethod
    def lift(cls, nvars: int, value) -> "SmoothCoefficient":
        if isinstance(value, SmoothCoefficient):
            return value
        if isinstance(value, Polynomial):
            return cls(nvars, value.to_sympy(coordinate_symbols(nvars)))
        if isinstance(value, (int, Fraction)):
            f = Fraction(value)
            return cls(nvars, sympy.Rational(f.numerator, f.denominator))
        raise TypeError(f"cannot lift {value!r}")

    @property
    def symbols(self):
        return coordinate_symbols(self.nvars)

    def is_zero(self) -> bool:
        return self.expr == 0

    def __repr__(self) -> str:
        return f"SmoothCoefficient({self.expr})"

    def __eq__(self, other) -> bool:
        if isinstance(other, SmoothCoefficient):
            return sympy.simplify(self.expr - other.expr) == 0
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.expr)

    def _binary(self, other, op):
        try:
            o = SmoothCoefficient.lift(self.nvars, other)
        except TypeError:
            return NotImplemented
        return SmoothCoefficient(self.nvars, op(self.expr, o.expr))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __neg__(self):
        return SmoothCoefficient(self.nvars, -self.expr)

    def diff(self, k: int) -> "SmoothCoefficient":
        return SmoothCoefficient(self.nvars, sympy.diff(self.expr, self.symbols[k]))

    @cached_property
    def _scalar_fn(self):
        return sympy.lambdify(self.symbols, self.expr, modules="math")

    @cached_property
    def _array_fn(self):
        return sympy.lambdify(self.symbols, self.expr, modules="numpy")

    def evaluate_float(self, point) -> float:
        return float(self._scalar_fn(*(float(v) for v in point)))

    def __call__(self, point) -> float:
        return self.evaluate_float(point)

    def evaluate_array(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        # Piecewise branches are all evaluated by numpy; discarded ones may be nan.
        with np.errstate(all="ignore"):
            out = self._array_fn(*(X[:, k] for k in range(self.nvars)))
        return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()
