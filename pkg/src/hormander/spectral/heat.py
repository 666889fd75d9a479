"""Heat traces, diagonal heat kernels and power-law fits of truncated spectra.

A spectrum truncated at λ_K is only trusted where the neglected modes are
negligible: t >= t_min with K e^{-λ_K t} <= 1e-6, and t <= t_max where
Z_K(t) still exceeds 3 (enough modes contribute to see a power law).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .. import _kernels
from ..eigen import Spectrum

TAIL_REL = 1e-6
Z_FLOOR = 3.0
MIN_FIT_POINTS = 5
MIN_WEYL_POINTS = 20
WEYL_RANGE = (0.2, 0.6)


class WindowError(ValueError):
    """The truncated spectrum leaves no usable t range (or too few points to fit)."""


def heat_sum(values: np.ndarray, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return _kernels.heat_sums(np.asarray(values, dtype=float), np.ones((1, len(values))), t)[:, 0]


def trace_window(values: np.ndarray, tail: float = TAIL_REL, z_floor: float = Z_FLOOR) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    K = len(values)
    lam_K = values[-1]
    t_min = math.log(K / tail) / lam_K
    if heat_sum(values, t_min)[0] < z_floor:
        raise WindowError(
            f"empty trace window: Z(t_min={t_min:.3g}) < {z_floor}; K={K} is too small"
        )
    hi = t_min
    while heat_sum(values, hi)[0] >= z_floor:
        hi *= 2.0
    t_max = brentq(lambda t: heat_sum(values, t)[0] - z_floor, t_min, hi, xtol=1e-14, rtol=1e-13)
    return t_min, t_max


@dataclass(frozen=True)
class HeatTrace:
    t: np.ndarray
    Z: np.ndarray
    valid_window: tuple[float, float]
    K_used: int

    @property
    def in_window(self) -> np.ndarray:
        lo, hi = self.valid_window
        return (self.t >= lo * (1 - 1e-12)) & (self.t <= hi * (1 + 1e-12))

    def to_csv(self, path: str | Path) -> None:
        _write_samples(path, "Z", self.t, self.Z)


def _write_samples(path, name, t, y):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", name])
        for a, b in zip(t, y):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])


EMPTY_WINDOW = (math.nan, math.nan)


def _window_or_empty(values, t_grid):
    # an explicit grid is still evaluated when K is too small for a window; no sample is flagged valid
    try:
        return trace_window(values)
    except WindowError:
        if t_grid is None:
            raise
        return EMPTY_WINDOW


def heat_trace(spec: Spectrum, t_grid=None, samples: int = 40) -> HeatTrace:
    """Z_K(t) = Σ_{j<=K} e^{-λ_j t}; the default grid spans the valid window geometrically."""
    window = _window_or_empty(spec.values, t_grid)
    if t_grid is None:
        t = np.geomspace(window[0], window[1], samples)
    else:
        t = np.asarray(t_grid, dtype=float)
        if np.any(t <= 0):
            raise ValueError("t values must be positive")
    return HeatTrace(t, heat_sum(spec.values, t), window, spec.K)


def _loglog_fit(x, y) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def trace_exponent_fit(trace: HeatTrace) -> tuple[float, float]:
    """Least-squares slope and exp(intercept) of log Z against log t inside the window."""
    m = trace.in_window
    if m.sum() < MIN_FIT_POINTS:
        raise WindowError(f"only {int(m.sum())} trace samples in the valid window")
    slope, intercept = _loglog_fit(trace.t[m], trace.Z[m])
    return slope, math.exp(intercept)


# -- counting function fits ----------------------------------------------------------


@dataclass(frozen=True)
class WeylFit:
    exponent: float
    coefficient: float
    k_range: tuple[int, int]
    points: int
    sensitivity: dict


def _weyl_indices(K: int, fit_range) -> tuple[int, int]:
    lo = max(1, math.ceil(fit_range[0] * K))
    hi = math.floor(fit_range[1] * K)
    return lo, hi


def _counts(values: np.ndarray) -> np.ndarray:
    # N(λ_k) counts ties, so a repeated eigenvalue contributes its full multiplicity
    return np.searchsorted(values, values, side="right").astype(float)


def _weyl_core(values, fit_range):
    K = len(values)
    lo, hi = _weyl_indices(K, fit_range)
    if hi - lo + 1 < MIN_WEYL_POINTS:
        raise WindowError(f"fewer than {MIN_WEYL_POINTS} eigenvalues in the Weyl window (K={K})")
    lam = values[lo - 1 : hi]
    N = _counts(values)[lo - 1 : hi]
    slope, intercept = _loglog_fit(lam, N)
    return slope, math.exp(intercept), (lo, hi)


def weyl_fit(spec: Spectrum, fit_range=WEYL_RANGE) -> WeylFit:
    """Slope of log N(λ) against log λ over λ_{⌈aK⌉} .. λ_{⌊bK⌋}; window shifts reported."""
    values = np.asarray(spec.values, dtype=float)
    slope, coef, (lo, hi) = _weyl_core(values, fit_range)
    sens = {}
    a, b = fit_range
    for name, rng in (("lower", (a / 2, b - a / 2)), ("upper", (a + 0.1, b + 0.1)), ("wide", (a / 2, min(1.0, b + 0.2)))):
        try:
            sens[name] = _weyl_core(values, rng)[0]
        except WindowError:
            continue
    return WeylFit(slope, coef, (lo, hi), hi - lo + 1, sens)


def weyl_coefficient_fixed(spec: Spectrum, exponent: float, fit_range=WEYL_RANGE) -> float:
    """c in N(λ) ≈ c λ^r with r held fixed: exp of the mean of log N - r log λ over the window."""
    values = np.asarray(spec.values, dtype=float)
    lo, hi = _weyl_indices(len(values), fit_range)
    if hi - lo + 1 < MIN_WEYL_POINTS:
        raise WindowError(f"fewer than {MIN_WEYL_POINTS} eigenvalues in the Weyl window")
    lam = values[lo - 1 : hi]
    N = _counts(values)[lo - 1 : hi]
    return math.exp(float(np.mean(np.log(N) - exponent * np.log(lam))))


def growth_exponent(spec: Spectrum, fit_range=WEYL_RANGE) -> float:
    """Slope of log λ_k against log k over the Weyl window."""
    values = np.asarray(spec.values, dtype=float)
    lo, hi = _weyl_indices(len(values), fit_range)
    k = np.arange(lo, hi + 1, dtype=float)
    return _loglog_fit(k, values[lo - 1 : hi])[0]


# -- diagonal heat kernel ----------------------------------------------------------------


@dataclass(frozen=True)
class KernelSamples:
    t: np.ndarray
    h: np.ndarray
    valid_window: tuple[float, float]
    node: int
    point: tuple[float, ...]

    def to_csv(self, path: str | Path) -> None:
        _write_samples(path, "h", self.t, self.h)


def normalized_modes(spec: Spectrum, volume_element: float) -> np.ndarray:
    """Eigenvectors rescaled to unit L² norm for the lattice quadrature: φ_j = v_j / sqrt(h^n)."""
    if spec.vectors is None:
        raise ValueError("spectrum has no eigenvectors")
    return spec.vectors / math.sqrt(volume_element)


def _kernel_window(values, phi2_x, sup2, base):
    """Smallest t >= base[0] with K sup|φ|² e^{-λ_K t} <= 1e-6 h(x, x, t)."""
    K = len(values)
    lam_K = values[-1]

    def excess(t):
        h = float(_kernels.heat_sums(values, phi2_x[None, :], np.array([t]))[0, 0])
        return math.log(K * sup2) - lam_K * t - math.log(TAIL_REL * h)

    lo, hi = base
    if excess(lo) <= 0:
        return lo, hi
    if excess(hi) > 0:
        raise WindowError("empty kernel window: tail bound never met below t_max")
    return brentq(excess, lo, hi, xtol=1e-15, rtol=1e-12), hi


def diagonal_kernel(spec: Spectrum, grid, node: int, t_grid=None, samples: int = 40, span: float | None = None) -> KernelSamples:
    """h_K(x, x, t) = Σ_{j<=K} e^{-λ_j t} φ_j(x)² at lattice node ``node`` (matrix row).

    The tail estimate replaces the unknown φ_j(x)², j > K, by the largest
    computed max|φ_j|². With ``span`` the default grid stops at span * t_min,
    the short-time end of the window.
    """
    phi = normalized_modes(spec, grid.volume_element)
    phi2_x = phi[node] ** 2
    sup2 = float(np.max(np.abs(phi)) ** 2)
    base = _window_or_empty(spec.values, t_grid)
    window = base if base is EMPTY_WINDOW else _kernel_window(np.asarray(spec.values), phi2_x, sup2, base)
    if t_grid is None:
        hi = window[1] if span is None else min(window[1], span * window[0])
        t = np.geomspace(window[0], hi, samples)
    else:
        t = np.asarray(t_grid, dtype=float)
    h = _kernels.heat_sums(np.asarray(spec.values), phi2_x[None, :], t)[:, 0]
    return KernelSamples(t, h, window, int(node), tuple(float(v) for v in grid.nodes[node]))


def kernel_exponent_fit(ks: KernelSamples) -> tuple[float, float]:
    lo, hi = ks.valid_window
    m = (ks.t >= lo * (1 - 1e-12)) & (ks.t <= hi * (1 + 1e-12))
    if m.sum() < MIN_FIT_POINTS:
        raise WindowError(f"only {int(m.sum())} kernel samples in the valid window")
    slope, intercept = _loglog_fit(ks.t[m], ks.h[m])
    return slope, math.exp(intercept)


def kernel_trace_identity(spec: Spectrum, volume_element: float, t) -> float:
    """Max relative gap between Σ_x h_K(x, x, t) h^n and Z_K(t) over the given t."""
    phi = normalized_modes(spec, volume_element)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    h = _kernels.heat_sums(np.asarray(spec.values), np.ascontiguousarray(phi**2), t)  # (nt, N)
    integral = h.sum(axis=1) * volume_element
    Z = heat_sum(spec.values, t)
    return float(np.max(np.abs(integral - Z) / Z))
