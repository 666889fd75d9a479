"""Sparse multivariate polynomials with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions and "p/q" strings to a Fraction.

    Floats are accepted only if they are exactly representable as a short
    decimal; use strings for anything else.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(repr(value))
    raise TypeError(f"cannot convert {value!r} to an exact rational")


class Polynomial:
    """Polynomial in ``nvars`` variables, stored as ``{exponents: coefficient}``.

    Zero coefficients are never stored, so two polynomials are equal iff
    their term dictionaries are equal.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    exact = True

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | Iterable = ()):
        self.nvars = int(nvars)
        clean: dict[tuple[int, ...], Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise ValueError(f"exponent tuple {exps} has wrong length for {self.nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = clean.get(exps, Fraction(0)) + as_fraction(coeff)
            if c:
                clean[exps] = c
            else:
                clean.pop(exps, None)
        self._terms = clean
        self._hash = None

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, k: int, coeff=1) -> "Polynomial":
        exps = [0] * nvars
        exps[k] = 1
        return cls(nvars, {tuple(exps): coeff})

    # -- basic protocol -----------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for exps, c in sorted(self._terms.items(), reverse=True):
            mono = "*".join(
                f"x{k + 1}" + (f"^{e}" if e > 1 else "") for k, e in enumerate(exps) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different numbers of variables")
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.nvars, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms = dict(self._terms)
        for exps, c in o._terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return Polynomial(self.nvars, {e: c * v for e, v in self._terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in o._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def diff(self, k: int) -> "Polynomial":
        """Partial derivative with respect to variable ``k`` (0-based)."""
        out = {}
        for exps, c in self._terms.items():
            if exps[k]:
                e = list(exps)
                e[k] -= 1
                out[tuple(e)] = c * exps[k]
        return Polynomial(self.nvars, out)

    # -- evaluation ---------------------------------------------------

    def __call__(self, point: Sequence) -> Fraction:
        """Exact value at a rational point."""
        if len(point) != self.nvars:
            raise ValueError("point has wrong dimension")
        x = [as_fraction(v) for v in point]
        total = Fraction(0)
        for exps, c in self._terms.items():
            term = c
            for xi, e in zip(x, exps):
                if e:
                    term *= xi**e
            total += term
        return total

    def evaluate_float(self, point: Sequence[float]) -> float:
        total = 0.0
        for exps, c in self._terms.items():
            term = float(c)
            for xi, e in zip(point, exps):
                if e:
                    term *= float(xi) ** e
            total += term
        return total

    def evaluate_array(self, X: np.ndarray) -> np.ndarray:
        """Float evaluation at the rows of an ``(npoints, nvars)`` array."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0])
        for exps, c in self._terms.items():
            term = np.full(X.shape[0], float(c))
            for k, e in enumerate(exps):
                if e:
                    term *= X[:, k] ** e
            out += term
        return out

    # -- serialization ------------------------------------------------

    def to_json(self) -> list[dict]:
        return [
            {"c": f"{c.numerator}/{c.denominator}", "e": list(exps)}
            for exps, c in sorted(self._terms.items())
        ]

    @classmethod
    def from_json(cls, nvars: int, data: Iterable[Mapping]) -> "Polynomial":
        return cls(nvars, [(term["e"], as_fraction(term["c"])) for term in data])

    def to_sympy(self, symbols):
        import sympy

        expr = sympy.Integer(0)
        for exps, c in self._terms.items():
            mono = sympy.Rational(c.numerator, c.denominator)
            for s, e in zip(symbols, exps):
                mono *= s**e
            expr += mono
        return expr
