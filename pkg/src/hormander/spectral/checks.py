"""Quantitative checks of eigenvalue bounds and asymptotics, one record per check.

Each record carries an ``anchor``: a stable label for the bound being
tested. "Stabilizes" and "bounded below" always mean the same thing here:
over the last half of the k range the quantity stays within a factor 2 of
its median there.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..eigen import Spectrum
from . import heat
from .heisenberg import c_n, explicit_sum_constant, hansson_laptev_constant, alpha_n

STABLE_FACTOR = 2.0
TAUBERIAN_RTOL = 0.25
LOG_DRIFT_FLOOR = -0.05

ANCHORS = {
    "thm1_uniform_bound": "heat-kernel/uniform-diagonal-bound",
    "thm2": "eigenvalues/partial-sum-lower-bound",
    "thm4": "eigenvalues/gap-upper-bound",
    "thm5": "eigenvalues/condition-A-lower-bound",
    "weyl": "eigenvalues/weyl-asymptotics",
    "trace": "heat-trace/small-time-power-law",
    "tauberian": "heat-trace/tauberian-equivalence",
    "hansson_laptev": "heisenberg/hansson-laptev-lower-bound",
    "heisenberg_lower": "heisenberg/explicit-partial-sum-bound",
    "kernel": "heat-kernel/pointwise-small-time-asymptotics",
    "supnorm": "eigenfunctions/sup-norm-growth",
    "grushin_log": "grushin/log-corrected-lower-bound",
    "growth": "eigenvalues/two-sided-growth-order",
    "eigenvalues": "classical/separation-of-variables",
    "indices": "fields/pointwise-homogeneous-dimension",
    "H": "fields/degeneracy-set-measure",
    "conditionA": "fields/condition-A-integrability",
    "characteristic": "domain/non-characteristic-boundary",
}


class ConditionARefused(ValueError):
    """check_thm5 is only meaningful when condition (A) holds."""


@dataclass
class CheckRecord:
    name: str
    anchor: str
    passed: bool
    fitted: dict = field(default_factory=dict)
    tolerance: object = None
    inputs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "pass": bool(self.passed),
            "fitted": _jsonable(self.fitted),
            "tolerance": _jsonable(self.tolerance),
            "inputs": _jsonable(self.inputs),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return v
    return obj


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.checks.append(record)
        return record

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        out = {"checks": [c.to_json() for c in self.checks]}
        if self.config:
            out["config"] = _jsonable(self.config)
        if self.meta:
            out["meta"] = _jsonable(self.meta)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n")


def record(name: str, passed: bool, fitted=None, tolerance=None, inputs=None, anchor_key: str | None = None) -> CheckRecord:
    return CheckRecord(name, ANCHORS[anchor_key or name], bool(passed), fitted or {}, tolerance, inputs or {})


# -- shared rules ----------------------------------------------------------------------


def stabilizes(q: np.ndarray, factor: float = STABLE_FACTOR) -> tuple[bool, float]:
    """Last half of ``q`` within a factor of its median; returns (ok, median)."""
    q = np.asarray(q, dtype=float)
    tail = q[len(q) // 2 :]
    med = float(np.median(tail))
    ok = bool(med > 0 and np.all(tail >= med / factor) and np.all(tail <= med * factor))
    return ok, med


def _drift(k: np.ndarray, q: np.ndarray) -> float:
    return float(np.polyfit(np.log(k), np.log(q), 1)[0])


# -- lower bounds on partial sums --------------------------------------------------------


def _partial_sum_ratio(values: np.ndarray, power: float):
    k = np.arange(1, len(values) + 1, dtype=float)
    return k, np.cumsum(values) / k ** (1.0 + power)


def check_thm2(spec: Spectrum, nu_tilde: int) -> CheckRecord:
    """c_k = Σ_{j<=k} λ_j / k^(1+2/ν̃) stays positive and does not drift to zero."""
    k, c = _partial_sum_ratio(spec.values, 2.0 / nu_tilde)
    ok, med = stabilizes(c)
    tail = len(c) // 2
    fitted = {"C": float(c[-1]), "min_c": float(c.min()), "median_c": med, "drift": _drift(k[tail:], c[tail:])}
    return record("thm2", c.min() > 0 and ok, fitted, {"factor": STABLE_FACTOR}, {"nu_tilde": nu_tilde, "K": spec.K})


def check_thm5(spec: Spectrum, n: int, conditionA: str) -> CheckRecord:
    """Σ_{j<=k} λ_j >= C k^(1+2/n) with a stable C; refused unless condition (A) converges."""
    if conditionA != "convergent":
        raise ConditionARefused(f"condition (A) is {conditionA}; the k^(1+2/n) lower bound does not apply")
    k, c = _partial_sum_ratio(spec.values, 2.0 / n)
    ok, med = stabilizes(c)
    tail = len(c) // 2
    fitted = {"C": float(c[-1]), "min_c": float(c.min()), "median_c": med, "drift": _drift(k[tail:], c[tail:])}
    return record("thm5", c.min() > 0 and ok, fitted, {"factor": STABLE_FACTOR}, {"n": n, "K": spec.K})


def check_thm4(spec: Spectrum, n: int) -> CheckRecord:
    """r_k = (λ_k - λ_1) / (k-1)^(2/n) is bounded: no blow-up near k = K."""
    if spec.K < 10:
        raise ValueError("need K >= 10")
    lam = np.asarray(spec.values)
    k = np.arange(2, spec.K + 1, dtype=float)
    r = (lam[1:] - lam[0]) / (k - 1) ** (2.0 / n)
    cut = k > 0.9 * spec.K
    late, early = float(r[cut].max()), float(r[~cut].max())
    lo, hi = heat._weyl_indices(spec.K, heat.WEYL_RANGE)
    window = (k >= lo) & (k <= hi)
    fitted = {
        "C_tilde": float(np.median(r[window])),
        "max_r": float(r.max()),
        "argmax_k": int(k[np.argmax(r)]),
        "late_max": late,
        "early_max": early,
    }
    ok = bool(np.all(np.isfinite(r)) and late <= 1.1 * early)
    return record("thm4", ok, fitted, {"late_over_early": 1.1}, {"n": n, "K": spec.K})


def growth_check(spec: Spectrum, n: int, tol: float = 0.15) -> CheckRecord:
    p = heat.growth_exponent(spec)
    return record("growth", abs(p - 2.0 / n) <= tol, {"exponent": p, "expected": 2.0 / n}, tol, {"n": n, "K": spec.K})


# -- Heisenberg explicit constants ---------------------------------------------------------


def hansson_laptev_bound(spec: Spectrum, n: int, volume: float) -> CheckRecord:
    A = hansson_laptev_constant(n, volume)
    k = np.arange(1, spec.K + 1, dtype=float)
    bound = A * k ** (1.0 / (n + 1))
    ratio = np.asarray(spec.values) / bound
    C, err = c_n(n)
    fitted = {"constant": A, "C_n": C, "C_n_error": err, "min_ratio": float(ratio.min()), "argmin_k": int(np.argmin(ratio)) + 1}
    return record("hansson_laptev", bool(np.all(ratio >= 1.0)), fitted, 0.0, {"n": n, "volume": volume, "K": spec.K})


def heisenberg_explicit_lower(spec: Spectrum, n: int, volume: float) -> CheckRecord:
    B = explicit_sum_constant(n, volume)
    k = np.arange(1, spec.K + 1, dtype=float)
    ratio = np.cumsum(spec.values) / (B * k ** (1.0 + 1.0 / (n + 1)))
    fitted = {"constant": B, "alpha_n": alpha_n(n), "min_ratio": float(ratio.min()), "argmin_k": int(np.argmin(ratio)) + 1}
    return record("heisenberg_lower", bool(np.all(ratio >= 1.0)), fitted, 0.0, {"n": n, "volume": volume, "K": spec.K})


# -- fits against expected exponents ---------------------------------------------------------


def weyl_check(spec: Spectrum, expected: float, tol: float) -> CheckRecord:
    fit = heat.weyl_fit(spec)
    fitted = {"exponent": fit.exponent, "coefficient": fit.coefficient, "k_range": list(fit.k_range), "sensitivity": fit.sensitivity}
    return record("weyl", abs(fit.exponent - expected) <= tol, fitted, tol, {"expected": expected, "K": spec.K})


def trace_check(spec: Spectrum, expected: float, tol: float) -> CheckRecord:
    tr = heat.heat_trace(spec)
    slope, amp = heat.trace_exponent_fit(tr)
    fitted = {"exponent": slope, "amplitude": amp, "window": list(tr.valid_window)}
    return record("trace", abs(slope - expected) <= tol, fitted, tol, {"expected": expected, "K": spec.K})


def tauberian_consistency(
    spec: Spectrum,
    nu_tilde: int,
    reference: float | None = None,
    rtol: float = TAUBERIAN_RTOL,
    weyl_spec: Spectrum | None = None,
) -> CheckRecord:
    """t^(ν̃/2) Z(t) at the small-t end of the window against Γ(ν̃/2+1) times the Weyl coefficient.

    Both sides use the exponent fixed at ν̃/2, so fit errors in the slope
    do not leak into the amplitudes. With ``reference`` the trace amplitude
    is also compared against that value. ``weyl_spec`` (default ``spec``)
    is the spectrum whose Weyl window is trusted, when it is shorter than
    the one needed for the trace window.
    """
    r = nu_tilde / 2.0
    t_min, t_max = heat.trace_window(spec.values)
    amp = t_min**r * float(heat.heat_sum(spec.values, t_min)[0])
    weyl = heat.weyl_coefficient_fixed(weyl_spec or spec, r)
    predicted = math.gamma(r + 1.0) * weyl
    rel = abs(amp / predicted - 1.0)
    fitted = {"trace_amplitude": amp, "weyl_coefficient": weyl, "gamma_weyl": predicted, "relative_gap": rel, "t": t_min}
    ok = rel <= rtol
    if reference is not None:
        ref_rel = abs(amp / reference - 1.0)
        fitted.update({"reference": reference, "reference_gap": ref_rel})
        ok = ok and ref_rel <= rtol
    inputs = {"nu_tilde": nu_tilde, "K": spec.K, "weyl_K": (weyl_spec or spec).K}
    return record("tauberian", ok, fitted, rtol, inputs)


# -- eigenfunctions and kernels -------------------------------------------------------------------


def supnorm_growth(spec: Spectrum, nu_tilde: int, volume_element: float, volume: float | None = None) -> CheckRecord:
    """Slope of log max|φ_j| against log λ_j; the L∞ bound allows up to ν̃/4."""
    phi = heat.normalized_modes(spec, volume_element)
    s = np.max(np.abs(phi), axis=0)
    # a single mode, or one repeated level, carries no slope
    flat = np.ptp(spec.values) == 0
    slope = 0.0 if flat else float(np.polyfit(np.log(spec.values), np.log(s), 1)[0])
    fitted = {"slope": slope, "s_min": float(s.min()), "s_max": float(s.max())}
    ok = slope <= nu_tilde / 4.0 + 0.1
    if volume is not None:
        floor = volume**-0.5
        fitted["floor"] = floor
        ok = ok and bool(np.all(s >= floor * (1 - 1e-9)))
    return record("supnorm", ok, fitted, nu_tilde / 4.0 + 0.1, {"nu_tilde": nu_tilde, "K": spec.K})


def check_thm1_uniform_bound(kernels, nu_tilde: int, min_nodes: int = 20) -> CheckRecord:
    """sup over nodes and window of t^(ν̃/2) h_K(x, x, t), reported as the empirical constant."""
    if len(kernels) < min_nodes:
        raise ValueError(f"need diagonal kernels at >= {min_nodes} nodes, got {len(kernels)}")
    best, where = -np.inf, None
    for ks in kernels:
        v = ks.t ** (nu_tilde / 2.0) * ks.h
        i = int(np.argmax(v))
        if v[i] > best:
            best, where = float(v[i]), (ks.point, float(ks.t[i]))
    ok = bool(np.isfinite(best) and best > 0)
    return record(
        "thm1_uniform_bound", ok, {"C": best, "at_point": list(where[0]), "at_t": where[1]}, "finite", {"nu_tilde": nu_tilde, "nodes": len(kernels)}
    )


def kernel_slope_check(ks, expected: float, tol: float, label: str) -> CheckRecord:
    slope, amp = heat.kernel_exponent_fit(ks)
    fitted = {"exponent": slope, "amplitude": amp, "point": list(ks.point), "window": list(ks.valid_window), "t_range": [float(ks.t[0]), float(ks.t[-1])]}
    return record(f"kernel[{label}]", abs(slope - expected) <= tol, fitted, tol, {"expected": expected}, anchor_key="kernel")


def grushin_log_bound(spec: Spectrum, k_min: int = 20, upper: float = 0.6) -> CheckRecord:
    """λ_k log k / k stays bounded below, and k^(2/3) / λ_k decreases, over k in [20, 0.6K]."""
    if spec.K < 100:
        raise ValueError("need K >= 100")
    lam = np.asarray(spec.values)
    k = np.arange(1, spec.K + 1, dtype=float)
    sel = (k >= k_min) & (k <= math.floor(upper * spec.K))
    q = lam[sel] * np.log(k[sel]) / k[sel]
    stable, med = stabilizes(q)
    drift = _drift(k[sel], q)
    ratio = k[sel] ** (2.0 / 3.0) / lam[sel]
    trend = _drift(k[sel], ratio)
    lower_ok = stable and drift >= LOG_DRIFT_FLOOR
    fitted = {
        "ratio_min": float(q.min()),
        "ratio_median": med,
        "ratio_drift": drift,
        "k23_trend": trend,
        "lower_bound_ok": lower_ok,
        "decreasing_ok": trend < 0,
    }
    return record("grushin_log", lower_ok and trend < 0, fitted, {"factor": STABLE_FACTOR, "drift_floor": LOG_DRIFT_FLOOR}, {"K": spec.K})
