"""Bundled field systems with their default domains and run sizes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .fields import FieldSystem, Polynomial, SmoothCoefficient, VectorFieldExpr, constant_field, coordinate_symbols
from .geometry import DomainSpec, ball_mask

F = Fraction


@dataclass(frozen=True)
class Bundled:
    system: FieldSystem
    domain: DomainSpec
    resolution: int
    K: int
    trace_K: int
    samples: tuple = ()  # rational sample points for the index analysis
    H_domain: DomainSpec | None = None  # where the H fraction is measured, if not Ω
    H_resolution: int = 8
    kernel_points: tuple = ()  # (point, slope tolerance) pairs for diagonal-kernel fits
    checks: tuple[str, ...] = ()
    volume: float | None = None  # |Ω| when known in closed form
    extra: dict = field(default_factory=dict)


def _var(n, k, c=1):
    return Polynomial.variable(n, k, c)


def _zero(n):
    return Polynomial.zero(n)


def laplacian2d() -> FieldSystem:
    return FieldSystem(2, (constant_field(2, 0), constant_field(2, 1)), 1, "laplacian2d")


def grushin2d() -> FieldSystem:
    X1 = constant_field(2, 0)
    X2 = VectorFieldExpr(2, (_zero(2), _var(2, 0)))
    return FieldSystem(2, (X1, X2), 2, "grushin2d")


def grushin3d() -> FieldSystem:
    n = 3
    fields = [constant_field(n, 0), constant_field(n, 1)]
    for j in range(n - 1):
        fields.append(VectorFieldExpr(n, (_zero(n), _zero(n), _var(n, j))))
    return FieldSystem(n, tuple(fields), 2, "grushin3d")


def heisenberg(n: int = 1) -> FieldSystem:
    """X_j = ∂x_j + 2 y_j ∂z, Y_j = ∂y_j - 2 x_j ∂z on R^(2n+1)."""
    d = 2 * n + 1
    fields = []
    for j in range(n):
        comps = [_zero(d)] * d
        comps[j] = Polynomial.constant(d, 1)
        comps[-1] = _var(d, n + j, 2)
        fields.append(VectorFieldExpr(d, tuple(comps)))
    for j in range(n):
        comps = [_zero(d)] * d
        comps[n + j] = Polynomial.constant(d, 1)
        comps[-1] = _var(d, j, -2)
        fields.append(VectorFieldExpr(d, tuple(comps)))
    return FieldSystem(d, tuple(fields), 2, f"heisenberg{n}")


def bump_coefficient() -> SmoothCoefficient:
    """φ1(x1, x2) + φ2(x3) + φ3(x3): vanishes exactly on {r <= 3/2, -1 <= x3 <= 0}."""
    x1, x2, x3 = coordinate_symbols(3)
    r = sympy.sqrt(x1**2 + x2**2)
    half3 = sympy.Rational(3, 2)
    phi1 = sympy.Piecewise((sympy.exp(-sympy.log(r - half3) ** 2), r > half3), (0, True))
    phi2 = sympy.Piecewise((sympy.exp(-sympy.log(x3) ** 2), x3 > 0), (0, True))
    phi3 = sympy.Piecewise((sympy.exp(-sympy.log(-x3 - 1) ** 2), x3 < -1), (0, True))
    return SmoothCoefficient(3, phi1 + phi2 + phi3)


def example82() -> FieldSystem:
    n = 3
    X1 = VectorFieldExpr(n, (Polynomial.constant(n, 1), _zero(n), _var(n, 1, F(-1, 2))))
    X2 = VectorFieldExpr(n, (_zero(n), Polynomial.constant(n, 1), _var(n, 0, F(1, 2))))
    X3 = VectorFieldExpr(n, (_zero(n), _zero(n), bump_coefficient()))
    return FieldSystem(n, (X1, X2, X3), 2, "example82")


def _superellipsoid(half: Fraction, n: int, power: int = 16) -> Polynomial:
    """Σ (x_k / half)^power - 1: a smooth, nearly cubical domain."""
    g = Polynomial.constant(n, -1)
    for k in range(n):
        exps = tuple(power if i == k else 0 for i in range(n))
        g = g + Polynomial(n, {exps: half ** (-power)})
    return g


# rational sample points; the first ten of example82 lie in H, the last ten off it
GRUSHIN2D_SAMPLES = tuple(
    [(F(0), F(k, 5) - F(1, 2)) for k in range(5)]
    + [(F(1, 2), F(0)), (F(-1, 3), F(1, 4)), (F(7, 10), F(-1, 2)), (F(1, 10), F(1, 10)), (F(6, 5), F(0))]
)
HEISENBERG_SAMPLES = tuple(
    (F(a, 4), F(b, 4), F(c, 4)) for a, b, c in [(0, 0, 0), (1, -2, 3), (-3, 1, 0), (2, 2, -2), (-4, 3, 1), (4, 4, 4)]
)
EXAMPLE82_IN_H = (
    (F(0), F(0), F(0)),
    (F(0), F(0), F(-1, 2)),
    (F(1), F(0), F(-1, 4)),
    (F(1, 2), F(1, 2), F(-1)),
    (F(-1), F(1), F(-3, 4)),
    (F(3, 2), F(0), F(-1, 2)),
    (F(0), F(-6, 5), F(-1, 10)),
    (F(-1, 3), F(-2, 3), F(-9, 10)),
    (F(9, 10), F(-9, 10), F(-1, 5)),
    (F(-7, 5), F(1, 5), F(-3, 5)),
)
EXAMPLE82_OFF_H = (
    (F(0), F(0), F(1, 2)),
    (F(0), F(0), F(1)),
    (F(0), F(0), F(-2)),
    (F(1, 2), F(-1, 2), F(3, 2)),
    (F(5, 2), F(0), F(-1, 2)),
    (F(0), F(-5, 2), F(0)),
    (F(-2), F(-3, 2), F(-1, 2)),
    (F(1), F(1), F(-2)),
    (F(-1, 2), F(1, 4), F(2)),
    (F(3, 2), F(2), F(1, 4)),
)


def _grushin2d_bundle() -> Bundled:
    # x1 = 0 and x1 = 1/2 are lattice lines at resolution 192 (h = 1/80)
    dom = DomainSpec(((F(-4, 5), F(8, 5)), (F(-6, 5), F(6, 5))), ball_mask((F(3, 10), F(0)), 1))
    return Bundled(
        grushin2d(),
        dom,
        192,
        400,
        400,
        GRUSHIN2D_SAMPLES,
        kernel_points=(((0.0, 0.0), 0.25), ((0.5, 0.0), 0.2)),
        checks=("indices", "H", "conditionA", "thm2", "thm4", "thm5", "grushin_log", "kernel", "thm1", "supnorm"),
        volume=math.pi,
    )


def _grushin3d_bundle() -> Bundled:
    dom = DomainSpec(((F(-7, 10), F(13, 10)), (F(-1), F(1)), (F(-1), F(1))), ball_mask((F(3, 10), F(0), F(0)), 1))
    samples = ((F(0), F(0), F(0)), (F(0), F(0), F(1, 2)), (F(1, 2), F(0), F(0)), (F(0), F(-1, 3), F(1, 4)), (F(1, 4), F(1, 4), F(-1, 2)))
    return Bundled(
        grushin3d(),
        dom,
        32,
        250,
        250,
        samples,
        checks=("indices", "H", "conditionA", "thm2", "thm4", "thm5", "growth"),
        volume=4.0 * math.pi / 3.0,
    )


def _laplacian_bundle() -> Bundled:
    dom = DomainSpec(((F(0), F(1)), (F(0), F(1))))
    samples = ((F(1, 2), F(1, 2)), (F(1, 4), F(3, 4)), (F(1, 10), F(9, 10)))
    return Bundled(
        laplacian2d(),
        dom,
        128,
        20,
        500,
        samples,
        kernel_points=(((0.5, 0.5), 0.1),),
        checks=("indices", "H", "conditionA", "eigenvalues", "weyl", "trace", "tauberian", "thm2", "thm4", "thm5", "kernel", "supnorm"),
        volume=1.0,
        extra={"tolerances": {"weyl": 0.1, "trace": 0.1}, "trace_reference": 1.0 / (4.0 * math.pi)},
    )


def _heisenberg_bundle() -> Bundled:
    dom = DomainSpec(((F(-1), F(1)),) * 3)
    return Bundled(
        heisenberg(1),
        dom,
        24,
        400,
        1000,
        HEISENBERG_SAMPLES,
        checks=("indices", "H", "weyl", "trace", "thm2", "thm4", "hansson_laptev", "heisenberg_lower", "tauberian", "supnorm"),
        volume=8.0,
    )


def _example82_bundle() -> Bundled:
    half = F(11, 5)
    dom = DomainSpec(((-half, half),) * 3, _superellipsoid(half, 3))
    D2 = DomainSpec(((F(-2), F(2)),) * 3)
    return Bundled(
        example82(),
        dom,
        16,
        60,
        60,
        EXAMPLE82_IN_H + EXAMPLE82_OFF_H,
        H_domain=D2,
        H_resolution=8,
        checks=("indices", "H", "conditionA", "thm2", "thm4"),
    )


BUNDLED = {
    "laplacian2d": _laplacian_bundle,
    "grushin2d": _grushin2d_bundle,
    "grushin3d": _grushin3d_bundle,
    "heisenberg1": _heisenberg_bundle,
    "example82": _example82_bundle,
}


def bundled(name: str) -> Bundled:
    try:
        return BUNDLED[name]()
    except KeyError:
        raise KeyError(f"unknown bundled system {name!r}; choose from {sorted(BUNDLED)}") from None
