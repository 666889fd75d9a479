"""Vector fields with polynomial (or smooth) coefficients and their Lie brackets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import sympy

from .polynomial import Polynomial, as_fraction
from .smooth import SmoothCoefficient, coordinate_symbols


@dataclass(frozen=True)
class VectorFieldExpr:
    """X = sum_k components[k] * d/dx_k."""

    dim: int
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.dim:
            raise ValueError(f"expected {self.dim} components, got {len(self.components)}")

    @classmethod
    def from_polys(cls, components: Sequence) -> "VectorFieldExpr":
        return cls(len(components), tuple(components))

    @classmethod
    def zero(cls, dim: int) -> "VectorFieldExpr":
        return cls(dim, tuple(Polynomial.zero(dim) for _ in range(dim)))

    @property
    def exact(self) -> bool:
        return all(c.exact for c in self.components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __add__(self, other: "VectorFieldExpr") -> "VectorFieldExpr":
        _check_dims(self, other)
        return VectorFieldExpr(self.dim, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorFieldExpr") -> "VectorFieldExpr":
        _check_dims(self, other)
        return VectorFieldExpr(self.dim, tuple(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "VectorFieldExpr":
        return VectorFieldExpr(self.dim, tuple(-a for a in self.components))

    def scale(self, c) -> "VectorFieldExpr":
        c = as_fraction(c)
        return VectorFieldExpr(self.dim, tuple(a * c for a in self.components))

    def apply(self, f):
        """Derivative of the coefficient ``f`` along this field."""
        out = Polynomial.zero(self.dim)
        for k, a in enumerate(self.components):
            if a.is_zero():
                continue
            df = f.diff(k)
            if df.is_zero():
                continue
            out = out + a * df
        return out

    def evaluate(self, x) -> list:
        """Component values at ``x``; exact Fractions when every coefficient is a polynomial."""
        if self.exact:
            xs = [as_fraction(v) for v in x]
            return [c(xs) for c in self.components]
        return [c.evaluate_float(x) for c in self.components]

    def evaluate_array(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack([c.evaluate_array(X) for c in self.components], axis=1)

    def __repr__(self) -> str:
        parts = [f"({c})*d{k + 1}" for k, c in enumerate(self.components) if not c.is_zero()]
        return " + ".join(parts) if parts else "0"


def _check_dims(v: VectorFieldExpr, w: VectorFieldExpr) -> None:
    if v.dim != w.dim:
        raise ValueError(f"dimension mismatch: {v.dim} vs {w.dim}")


def bracket(v: VectorFieldExpr, w: VectorFieldExpr) -> VectorFieldExpr:
    """Lie bracket [v, w], component k = v(w_k) - w(v_k)."""
    _check_dims(v, w)
    comps = tuple(v.apply(wk) - w.apply(vk) for vk, wk in zip(v.components, w.components))
    return VectorFieldExpr(v.dim, comps)


@dataclass(frozen=True)
class FieldSystem:
    """m vector fields on R^n with declared Hörmander bound Q."""

    dim: int
    fields: tuple
    hormander_bound: int = 1
    name: str = ""

    def __post_init__(self):
        if not self.fields:
            raise ValueError("a field system needs at least one field")
        for f in self.fields:
            if f.dim != self.dim:
                raise ValueError(f"field of dimension {f.dim} in a system of dimension {self.dim}")
        if self.hormander_bound < 1:
            raise ValueError("Hörmander bound must be >= 1")

    @property
    def m(self) -> int:
        return len(self.fields)

    @property
    def exact(self) -> bool:
        return all(f.exact for f in self.fields)

    def scaled(self, j: int, c) -> "FieldSystem":
        fields = list(self.fields)
        fields[j] = fields[j].scale(c)
        return FieldSystem(self.dim, tuple(fields), self.hormander_bound, self.name)

    # -- JSON ---------------------------------------------------------

    def to_json(self) -> dict:
        fields = []
        for f in self.fields:
            comps = []
            for c in f.components:
                if isinstance(c, Polynomial):
                    comps.append(c.to_json())
                else:
                    comps.append({"expr": str(c.expr)})
            fields.append({"components": comps})
        return {"dim": self.dim, "fields": fields, "Q": self.hormander_bound}

    @classmethod
    def from_json(cls, data: dict, name: str = "") -> "FieldSystem":
        try:
            n = int(data["dim"])
            q = int(data.get("Q", 1))
            fields = []
            for f in data["fields"]:
                comps = []
                for c in f["components"]:
                    if isinstance(c, dict) and "expr" in c:
                        syms = {str(s): s for s in coordinate_symbols(n)}
                        comps.append(SmoothCoefficient(n, sympy.sympify(c["expr"], locals=syms)))
                    else:
                        comps.append(Polynomial.from_json(n, c))
                fields.append(VectorFieldExpr(n, tuple(comps)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"invalid field-system document: {exc}") from exc
        return cls(n, tuple(fields), q, name or data.get("name", ""))

    @classmethod
    def load(cls, path: str | Path) -> "FieldSystem":
        return cls.from_json(json.loads(Path(path).read_text()))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def constant_field(dim: int, k: int, coeff=1) -> VectorFieldExpr:
    comps = [Polynomial.zero(dim) for _ in range(dim)]
    comps[k] = Polynomial.constant(dim, coeff)
    return VectorFieldExpr(dim, tuple(comps))


def as_fraction_point(x) -> tuple[Fraction, ...]:
    return tuple(as_fraction(v) for v in x)
