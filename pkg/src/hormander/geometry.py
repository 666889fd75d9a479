"""Domains, lattices, boundary checks, the measure of H and condition (A)."""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .fields import (
    CommutatorBasis,
    FieldSystem,
    Polynomial,
    as_fraction,
    point_indices,
)
from .fields.exact import RANK_RTOL

CHARACTERISTIC_THRESHOLD = 1e-6


class GridError(ValueError):
    pass


class CharacteristicWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DomainSpec:
    """Ω = box ∩ {mask < 0}; without a mask Ω is the open box."""

    box: tuple[tuple[Fraction, Fraction], ...]
    mask: Polynomial | None = None

    def __post_init__(self):
        box = tuple((as_fraction(lo), as_fraction(hi)) for lo, hi in self.box)
        if not box or any(lo >= hi for lo, hi in box):
            raise ValueError(f"empty box {self.box}")
        object.__setattr__(self, "box", box)
        if self.mask is not None and self.mask.nvars != len(box):
            raise ValueError("mask dimension does not match the box")

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def box_volume(self) -> float:
        return float(math.prod(hi - lo for lo, hi in self.box))

    def mask_values(self, X: np.ndarray) -> np.ndarray:
        """Mask at float points, with an exact re-evaluation where the sign is in doubt."""
        X = np.asarray(X, dtype=float)
        if self.mask is None:
            return -np.ones(X.shape[0])
        g = self.mask.evaluate_array(X)
        doubtful = np.flatnonzero(np.abs(g) < 1e-9)
        for i in doubtful:
            g[i] = float(self.mask([Fraction(repr(float(v))) for v in X[i]]))
        return g

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo = np.array([float(b[0]) for b in self.box])
        hi = np.array([float(b[1]) for b in self.box])
        inside = np.all((X > lo) & (X < hi), axis=1)
        return inside & (self.mask_values(X) < 0)

    def to_json(self, resolution: Sequence[int] | None = None) -> dict:
        out = {
            "box": [[_frac_str(lo), _frac_str(hi)] for lo, hi in self.box],
            "mask": None if self.mask is None else self.mask.to_json(),
        }
        if resolution is not None:
            out["resolution"] = list(resolution)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DomainSpec":
        try:
            box = [(as_fraction(str(lo)), as_fraction(str(hi))) for lo, hi in data["box"]]
            mask = data.get("mask")
            poly = None if mask is None else Polynomial.from_json(len(box), mask)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"invalid domain document: {exc}") from exc
        return cls(tuple(box), poly)

    @classmethod
    def load(cls, path: str | Path) -> tuple["DomainSpec", list[int] | None]:
        data = json.loads(Path(path).read_text())
        return cls.from_json(data), data.get("resolution")


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def ball_mask(center: Sequence, radius) -> Polynomial:
    """|x - center|^2 - radius^2 as a polynomial."""
    n = len(center)
    g = Polynomial.constant(n, -as_fraction(radius) ** 2)
    for k, c in enumerate(center):
        t = Polynomial.variable(n, k) - as_fraction(c)
        g = g + t * t
    return g


@dataclass
class Grid:
    """Uniform lattice x = lo + i*h, i = 0..R per axis, restricted to interior nodes."""

    spec: DomainSpec
    resolution: tuple[int, ...]
    spacing: np.ndarray
    lattice: np.ndarray  # (N, n) integer lattice coordinates of interior nodes
    nodes: np.ndarray  # (N, n) float coordinates
    index: np.ndarray  # flat lattice index -> matrix row, -1 if not interior
    volume_element: float = field(init=False)

    def __post_init__(self):
        self.volume_element = float(np.prod(self.spacing))

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(r + 1 for r in self.resolution)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def strides(self) -> np.ndarray:
        shape = self.shape
        return np.array([int(np.prod(shape[k + 1 :])) for k in range(len(shape))], dtype=np.int64)

    def exact_node(self, row: int) -> tuple[Fraction, ...]:
        return tuple(
            lo + (hi - lo) * int(i) / r
            for (lo, hi), i, r in zip(self.spec.box, self.lattice[row], self.resolution)
        )

    def nearest_row(self, x: Sequence[float]) -> int:
        d = np.sum((self.nodes - np.asarray(x, dtype=float)) ** 2, axis=1)
        return int(np.argmin(d))

    def metadata(self) -> dict:
        return {
            "resolution": list(self.resolution),
            "spacing": [float(h) for h in self.spacing],
            "interior_nodes": int(self.size),
            "volume_element": self.volume_element,
        }


def lattice_points(spec: DomainSpec, resolution: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """All lattice indices and float coordinates, in C order."""
    shape = tuple(r + 1 for r in resolution)
    idx = np.indices(shape).reshape(len(shape), -1).T
    lo = np.array([float(b[0]) for b in spec.box])
    width = np.array([float(b[1] - b[0]) for b in spec.box])
    X = lo + idx * (width / np.asarray(resolution, dtype=float))
    return idx, X


def build_grid(spec: DomainSpec, resolution: Sequence[int] | int) -> Grid:
    if isinstance(resolution, (int, np.integer)):
        resolution = (int(resolution),) * spec.dim
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != spec.dim:
        raise GridError(f"resolution {resolution} does not match dimension {spec.dim}")
    if min(resolution) < 4:
        raise GridError("empty interior: resolution must be at least 4 per axis")
    idx, X = lattice_points(spec, resolution)
    res = np.asarray(resolution)
    interior = np.all((idx > 0) & (idx < res), axis=1)
    if spec.mask is not None:
        candidates = np.flatnonzero(interior)
        interior[candidates] = spec.mask_values(X[candidates]) < 0
    n_int = int(interior.sum())
    if n_int == 0:
        raise GridError("empty interior")
    index = np.full(idx.shape[0], -1, dtype=np.int64)
    index[interior] = np.arange(n_int)
    spacing = np.array([float(hi - lo) / r for (lo, hi), r in zip(spec.box, resolution)])
    return Grid(spec, resolution, spacing, idx[interior], X[interior], index)


# -- boundary ------------------------------------------------------------


@dataclass(frozen=True)
class CharacteristicReport:
    min_normal_component: float
    at_point: tuple[float, ...]
    samples: int
    characteristic: bool
    threshold: float = CHARACTERISTIC_THRESHOLD


def boundary_samples(spec: DomainSpec, count: int = 400, steps: int = 10, thin: bool = True) -> np.ndarray:
    """Points on {mask = 0} inside the box, from lattice points near the level set.

    ``count`` sets the lattice density; with ``thin`` the result is cut down
    to at most ``count`` evenly spaced samples.

    Each candidate is pulled onto the zero set by ``steps`` damped Newton steps
    x <- x - β g ∇g / |∇g|^2 (β halved while |g| fails to decrease).
    """
    if spec.mask is None:
        raise ValueError("boundary sampling needs a level-set mask")
    n = spec.dim
    r = max(16, 2 * int(math.ceil(count / 2.0 if n == 2 else 2 * count ** (1.0 / (n - 1)))))
    r += r % 2
    idx, X = lattice_points(spec, (r,) * n)
    g = spec.mask.evaluate_array(X)
    shape = (r + 1,) * n
    sign = (g < 0).reshape(shape)
    near = np.zeros(shape, dtype=bool)
    for k in range(n):
        a = [slice(None)] * n
        b = [slice(None)] * n
        a[k] = slice(0, -1)
        b[k] = slice(1, None)
        flip = sign[tuple(a)] != sign[tuple(b)]
        near[tuple(a)] |= flip
    pts = X[near.ravel()]
    grads = [spec.mask.diff(k) for k in range(n)]

    def grad(P):
        return np.stack([d.evaluate_array(P) for d in grads], axis=1)

    for _ in range(steps):
        gv = spec.mask.evaluate_array(pts)
        G = grad(pts)
        gn2 = np.sum(G * G, axis=1)
        if np.any(gn2 == 0):
            bad = pts[np.flatnonzero(gn2 == 0)[0]]
            raise ValueError(f"mask gradient vanishes at boundary sample {tuple(bad)}")
        step = (gv / gn2)[:, None] * G
        beta = np.ones(len(pts))
        for _ in range(8):
            trial = pts - beta[:, None] * step
            worse = np.abs(spec.mask.evaluate_array(trial)) > np.abs(gv)
            if not worse.any():
                break
            beta[worse] *= 0.5
        pts = pts - beta[:, None] * step
    lo = np.array([float(b[0]) for b in spec.box])
    hi = np.array([float(b[1]) for b in spec.box])
    pts = pts[np.all((pts >= lo) & (pts <= hi), axis=1)]
    pts = np.unique(np.round(pts, 12), axis=0)
    if thin and len(pts) > count:
        pts = pts[np.linspace(0, len(pts) - 1, count).round().astype(int)]
    return pts


def characteristic_check(
    spec: DomainSpec, system: FieldSystem, samples: int = 400
) -> CharacteristicReport:
    """Minimum over sampled ∂Ω of |(⟨X_1, ν⟩, ..., ⟨X_m, ν⟩)| with ν the unit normal.

    A value near zero means every field is tangent to the boundary there.
    Every projected sample is kept, so lattice-aligned tangency points are seen.
    """
    pts = boundary_samples(spec, samples, thin=False)
    G = np.stack([spec.mask.diff(k).evaluate_array(pts) for k in range(spec.dim)], axis=1)
    norm = np.linalg.norm(G, axis=1)
    if np.any(norm == 0):
        raise ValueError("mask gradient vanishes on the boundary")
    normal = G / norm[:, None]
    comps = np.stack([np.sum(f.evaluate_array(pts) * normal, axis=1) for f in system.fields], axis=1)
    strength = np.linalg.norm(comps, axis=1)
    i = int(np.argmin(strength))
    value = float(strength[i])
    report = CharacteristicReport(value, tuple(float(v) for v in pts[i]), len(pts), value < CHARACTERISTIC_THRESHOLD)
    if report.characteristic:
        warnings.warn(
            f"boundary is characteristic near {report.at_point} (normal component {value:.3g})",
            CharacteristicWarning,
            stacklevel=2,
        )
    return report


# -- measure of H ------------------------------------------------------------


def cell_centers(spec: DomainSpec, resolution: Sequence[int]):
    """Centers of the box cells that lie in Ω, as floats and as exact rationals."""
    n = spec.dim
    shape = tuple(resolution)
    idx = np.indices(shape).reshape(n, -1).T
    lo = np.array([float(b[0]) for b in spec.box])
    width = np.array([float(b[1] - b[0]) for b in spec.box])
    X = lo + (idx + 0.5) * (width / np.asarray(resolution, dtype=float))
    keep = spec.mask_values(X) < 0 if spec.mask is not None else np.ones(len(X), dtype=bool)
    return idx[keep], X[keep]


def nu_at_points(basis: CommutatorBasis, points: np.ndarray, exact_points=None) -> np.ndarray:
    """ν(x) at many points: exact per point for polynomial systems, batched SVD otherwise."""
    if basis.exact and exact_points is not None:
        return np.array([point_indices(basis, x).nu for x in exact_points], dtype=int)
    P = np.asarray(points, dtype=float)
    n = basis.dim
    rows = np.zeros((P.shape[0], len(basis), n))
    for i, e in enumerate(basis.entries):
        if not e.is_zero:
            rows[:, i, :] = e.expr.evaluate_array(P)
    scale = np.linalg.svd(rows, compute_uv=False)[:, 0]
    degrees = np.array(basis.degrees)
    dims = []
    for j in range(1, basis.max_degree + 1):
        s = np.linalg.svd(rows[:, degrees <= j, :], compute_uv=False)
        dims.append(np.sum(s > RANK_RTOL * scale[:, None], axis=1))
    dims = np.stack(dims, axis=1)
    prev = np.concatenate([np.zeros((len(P), 1), dtype=int), dims[:, :-1]], axis=1)
    return np.sum(np.arange(1, basis.max_degree + 1) * (dims - prev), axis=1)


@dataclass(frozen=True)
class HMeasure:
    resolutions: tuple[int, ...]
    fractions: tuple[float, ...]
    verdict: str  # "zero", "positive" or "inconclusive"

    @property
    def is_positive(self) -> bool | None:
        return {"zero": False, "positive": True}.get(self.verdict)


def measure_H(
    basis: CommutatorBasis,
    spec: DomainSpec,
    nu_tilde: int,
    resolution: int = 8,
    decay: float = 1.8,
    stable_rtol: float = 0.10,
) -> HMeasure:
    """Fraction of Ω-cells whose center has ν = ν̃, at resolutions R, 2R, 4R.

    |H| = 0 if the fraction falls by at least ``decay`` at each refinement;
    |H| > 0 if the last refinement changes it by at most ``stable_rtol``.
    """
    fractions = []
    levels = (resolution, 2 * resolution, 4 * resolution)
    for R in levels:
        res = (R,) * spec.dim
        idx, X = cell_centers(spec, res)
        if len(X) == 0:
            raise GridError("no cell centers inside the domain")
        exact_pts = None
        if basis.exact:
            exact_pts = [
                tuple(lo + (hi - lo) * Fraction(2 * int(i) + 1, 2 * R) for (lo, hi), i in zip(spec.box, row))
                for row in idx
            ]
        nus = nu_at_points(basis, X, exact_pts)
        fractions.append(float(np.mean(nus == nu_tilde)))
    f = fractions
    if all(v == 0.0 for v in f):
        verdict = "zero"
    elif all(b == 0.0 or a >= decay * b for a, b in zip(f, f[1:])):
        verdict = "zero"
    elif f[1] > 0 and abs(f[2] - f[1]) <= stable_rtol * f[1]:
        verdict = "positive"
    else:
        verdict = "inconclusive"
    return HMeasure(levels, tuple(fractions), verdict)


# -- condition (A) ------------------------------------------------------------

#: Known answers for bundled families; the numerical classifier is reported alongside.
CONDITION_A_KNOWN = {"grushin2d": "divergent", "grushin3d": "convergent", "laplacian2d": "convergent"}


@dataclass(frozen=True)
class ConditionAResult:
    verdict: str  # "convergent" or "divergent"
    numerical_verdict: str
    estimate: float
    eps: tuple[float, ...]
    integrals: tuple[float, ...]
    decay_exponent: float
    zero_fraction: float
    source: str  # "numerical" or "known"


def determinant_sum(system: FieldSystem, X: np.ndarray) -> np.ndarray:
    """Σ |det(X_i1, ..., X_in)| over n-subsets of the original fields, at float points."""
    n = system.dim
    vals = np.stack([f.evaluate_array(X) for f in system.fields], axis=1)  # (P, m, n)
    out = np.zeros(X.shape[0])
    for combo in itertools.combinations(range(system.m), n):
        out += np.abs(np.linalg.det(vals[:, combo, :]))
    return out


def condition_A_integral(
    system: FieldSystem,
    spec: DomainSpec,
    levels: int | None = None,
    cells_per_eps: float = 2.0,
    max_cells: int = 6_000_000,
    threshold: float = 0.05,
) -> ConditionAResult:
    """Classify ∫_Ω dx / Σ|det(X_I)| as convergent or divergent.

    For ε_j = 2^-j the integral is taken by the midpoint rule over the cells
    with Σ|det| >= ε_j, on a grid whose spacing shrinks with ε_j. The
    increments I(ε_{j+1}) - I(ε_j) behave like ε^p; p > ``threshold`` means
    the excised integrals settle (convergent), p <= ``threshold`` means
    logarithmic or faster growth (divergent).
    """
    n = spec.dim
    width = max(float(hi - lo) for lo, hi in spec.box)
    if levels is None:
        levels = 1
        while (cells_per_eps * width * 2 ** (levels + 1)) ** n <= max_cells and levels < 8:
            levels += 1
    eps, integrals = [], []
    zero_fraction = 0.0
    for j in range(1, levels + 1):
        e = 2.0**-j
        R = int(math.ceil(cells_per_eps * width / e))
        _, X = cell_centers(spec, (R,) * n)
        cell = math.prod(float(hi - lo) / R for lo, hi in spec.box)
        total = 0.0
        zeros = 0
        for chunk in np.array_split(X, max(1, len(X) // 200_000)):
            D = determinant_sum(system, chunk)
            zeros += int(np.sum(D == 0.0))
            keep = D >= e
            total += float(np.sum(1.0 / D[keep])) * cell
        if j == 1:
            zero_fraction = zeros / max(1, len(X))
        eps.append(e)
        integrals.append(total)
    if zero_fraction > 1e-3 or all(v == 0.0 for v in integrals):
        numerical, p = "divergent", float("-inf")
    else:
        inc = np.diff(integrals)
        if np.all(np.abs(inc) <= 1e-12 * max(abs(integrals[-1]), 1e-300)):
            numerical, p = "convergent", float("inf")
        else:
            good = inc > 0
            if good.sum() < 2:
                numerical, p = "convergent", float("inf")
            else:
                p = float(np.polyfit(np.log(np.array(eps[1:])[good]), np.log(inc[good]), 1)[0])
                numerical = "convergent" if p > threshold else "divergent"
    estimate = integrals[-1]
    if numerical == "convergent" and np.isfinite(p) and p > 0:
        r = 2.0**-p
        estimate = integrals[-1] + (integrals[-1] - integrals[-2]) * r / (1 - r)
    known = CONDITION_A_KNOWN.get(system.name)
    verdict = known if known is not None else numerical
    return ConditionAResult(
        verdict,
        numerical,
        float(estimate) if numerical == "convergent" else float("inf"),
        tuple(eps),
        tuple(integrals),
        p,
        zero_fraction,
        "known" if known is not None else "numerical",
    )
