"""Commutator enumeration and the pointwise indices built from it.

``nu(x)`` is computed two independent ways: from the ranks of the bracket
layers V_1(x) ⊂ V_2(x) ⊂ ... and as the smallest total formal degree of an
n-tuple of brackets with non-vanishing determinant. The two must agree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact import RANK_RTOL, exact_det, exact_rank, float_rank
from .polynomial import as_fraction
from .vector import FieldSystem, VectorFieldExpr, bracket


class HormanderError(ValueError):
    """The bracket-generating condition fails at a point within the degree bound."""


@dataclass(frozen=True)
class BasisEntry:
    expr: VectorFieldExpr
    degree: int
    word: tuple[int, ...]
    is_zero: bool


@dataclass(frozen=True)
class CommutatorBasis:
    dim: int
    entries: tuple[BasisEntry, ...]
    max_degree: int

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def exact(self) -> bool:
        return all(e.expr.exact for e in self.entries)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(e.degree for e in self.entries)

    def of_degree(self, d: int) -> list[BasisEntry]:
        return [e for e in self.entries if e.degree == d]


def enumerate_commutators(system: FieldSystem, Q: int | None = None) -> CommutatorBasis:
    """Right-nested brackets X_I = [X_j1, [X_j2, ... [X_a, X_b]]] of length <= Q.

    The innermost pair is taken with a <= b: [X_b, X_a] = -[X_a, X_b] spans
    nothing new and would double-count in Λ(x, r). Self-brackets [X_a, X_a]
    are kept as flagged zero entries so that word indices stay stable.
    """
    Q = system.hormander_bound if Q is None else Q
    if Q < 1:
        raise ValueError("Q must be >= 1")
    entries = [BasisEntry(f, 1, (j,), f.is_zero()) for j, f in enumerate(system.fields)]
    previous = []
    if Q >= 2:
        for a in range(system.m):
            for b in range(a, system.m):
                expr = bracket(system.fields[a], system.fields[b])
                previous.append(BasisEntry(expr, 2, (a, b), expr.is_zero()))
        entries.extend(previous)
    for d in range(3, Q + 1):
        layer = []
        for j, f in enumerate(system.fields):
            for inner in previous:
                expr = VectorFieldExpr.zero(system.dim) if inner.is_zero else bracket(f, inner.expr)
                layer.append(BasisEntry(expr, d, (j,) + inner.word, expr.is_zero()))
        entries.extend(layer)
        previous = layer
    return CommutatorBasis(system.dim, tuple(entries), Q)


# -- evaluation --------------------------------------------------------


def _use_exact(basis: CommutatorBasis, x) -> bool:
    return basis.exact and not any(isinstance(v, (float, np.floating)) for v in x)


def evaluate_basis(basis: CommutatorBasis, x, exact: bool | None = None):
    """Rows of component values, one per basis entry, at the point ``x``."""
    if len(x) != basis.dim:
        raise ValueError(f"point of dimension {len(x)} for a basis in dimension {basis.dim}")
    exact = _use_exact(basis, x) if exact is None else exact
    if exact:
        xs = [as_fraction(v) for v in x]
        zero = [Fraction(0)] * basis.dim
        return [zero if e.is_zero else e.expr.evaluate(xs) for e in basis.entries], True
    xf = [float(v) for v in x]
    rows = np.zeros((len(basis), basis.dim))
    for i, e in enumerate(basis.entries):
        if not e.is_zero:
            rows[i] = [c.evaluate_float(xf) for c in e.expr.components]
    return rows, False


def _nonsingular(rows, exact: bool, scale: float) -> bool:
    if exact:
        return exact_det(rows) != 0
    return float_rank(rows, RANK_RTOL, scale) == len(rows)


def lambda_I(basis: CommutatorBasis, I: Sequence[int], x):
    """det(Y_i1, ..., Y_in)(x); exact when the basis and point are rational."""
    if len(I) != basis.dim:
        raise ValueError(f"need exactly {basis.dim} indices, got {len(I)}")
    rows, exact = evaluate_basis(basis, x)
    sub = [rows[i] for i in I]
    if exact:
        return exact_det(sub)
    return float(np.linalg.det(np.asarray(sub)))


def _combination_dets(basis: CommutatorBasis, rows, exact: bool):
    """(|det|, total degree) over unordered n-subsets of entries non-zero at x."""
    live = [i for i, r in enumerate(rows) if any(r)]
    degrees = basis.degrees
    for combo in itertools.combinations(live, basis.dim):
        sub = [rows[i] for i in combo]
        det = exact_det(sub) if exact else float(np.linalg.det(np.asarray(sub)))
        if det:
            yield abs(det), sum(degrees[i] for i in combo)


def capital_lambda(basis: CommutatorBasis, x, r):
    """Λ(x, r) = sum over ordered n-tuples I of |λ_I(x)| r^d(I).

    Tuples with a repeated entry vanish and each unordered subset appears n!
    times, so the sum is n! times the sum over subsets.
    """
    rows, exact = evaluate_basis(basis, x)
    exact_r = exact and not isinstance(r, (float, np.floating))
    rr = as_fraction(r) if exact_r else float(r)
    if rr <= 0:
        raise ValueError("r must be positive")
    total = Fraction(0) if exact_r else 0.0
    for det, d in _combination_dets(basis, rows, exact):
        total += (det if exact_r else float(det)) * rr**d
    return math.factorial(basis.dim) * total


def capital_lambda_terms(basis: CommutatorBasis, x) -> dict[int, float]:
    """Coefficients c_d of Λ(x, r) = sum_d c_d r^d, as floats."""
    rows, exact = evaluate_basis(basis, x)
    out: dict[int, float] = {}
    for det, d in _combination_dets(basis, rows, exact):
        out[d] = out.get(d, 0.0) + float(det)
    fact = math.factorial(basis.dim)
    return {d: fact * c for d, c in sorted(out.items())}


@dataclass(frozen=True)
class PointIndices:
    point: tuple
    layer_dims: tuple[int, ...]
    nu: int
    hormander_ok: bool


def point_indices(basis: CommutatorBasis, x) -> PointIndices:
    """Layer dimensions ν_j(x) = dim V_j(x) and ν(x) = Σ j (ν_j - ν_{j-1})."""
    rows, exact = evaluate_basis(basis, x)
    degrees = basis.degrees
    scale = 0.0
    if not exact:
        scale = float(np.linalg.svd(rows, compute_uv=False)[0]) if len(rows) else 0.0
    dims = []
    for j in range(1, basis.max_degree + 1):
        layer = [rows[i] for i in range(len(rows)) if degrees[i] <= j]
        if exact:
            dims.append(exact_rank(layer))
        else:
            dims.append(float_rank(layer, RANK_RTOL, scale) if scale > 0 else 0)
    nu = sum(j * (dims[j - 1] - (dims[j - 2] if j > 1 else 0)) for j in range(1, len(dims) + 1))
    point = tuple(as_fraction(v) for v in x) if exact else tuple(float(v) for v in x)
    return PointIndices(point, tuple(dims), nu, dims[-1] == basis.dim)


def nu_via_determinants(basis: CommutatorBasis, x) -> int:
    """min{d(I) : λ_I(x) != 0}, by direct search over n-subsets of brackets."""
    rows, exact = evaluate_basis(basis, x)
    scale = 0.0
    if not exact:
        scale = float(np.linalg.svd(rows, compute_uv=False)[0])
    degrees = basis.degrees
    live = [i for i, r in enumerate(rows) if any(r)]
    live.sort(key=lambda i: degrees[i])
    best = None
    for combo in itertools.combinations(live, basis.dim):
        d = sum(degrees[i] for i in combo)
        if best is not None and d >= best:
            continue
        if _nonsingular([rows[i] for i in combo], exact, scale):
            best = d
    if best is None:
        raise HormanderError(
            f"Hörmander condition fails at x={tuple(x)} within Q={basis.max_degree}"
        )
    return best


def metivier_index(basis: CommutatorBasis, samples) -> tuple[int, list[bool]]:
    """Sample maximum ν̃ of ν(x), and which samples attain it (membership in H)."""
    if not samples:
        raise ValueError("need at least one sample point")
    nus = []
    for x in samples:
        pi = point_indices(basis, x)
        if not pi.hormander_ok:
            raise HormanderError(
                f"Hörmander condition fails at x={tuple(x)} within Q={basis.max_degree}"
            )
        nus.append(pi.nu)
    nu_tilde = max(nus)
    return nu_tilde, [v == nu_tilde for v in nus]


def metivier_condition_check(basis: CommutatorBasis, samples) -> list[bool]:
    """Per layer: is dim V_j(x) the same at every sample? (necessary condition for (M))"""
    if not samples:
        raise ValueError("need at least one sample point")
    dims = [point_indices(basis, x).layer_dims for x in samples]
    return [len({d[j] for d in dims}) == 1 for j in range(basis.max_degree)]
