"""Explicit lower bounds for the Kohn Laplacian on a bounded domain of the Heisenberg group.

Both bounds assume fields X_j = ∂x_j + 2y_j ∂z, Y_j = ∂y_j - 2x_j ∂z, for
which the global heat kernel on the diagonal is α_n / (4π t)^(n+1).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import comb

from .quadrature import gauss_kronrod

SERIES_TOL = 1e-10


class SeriesError(RuntimeError):
    pass


def _theta_over_sinh(theta: np.ndarray) -> np.ndarray:
    """θ / sinh θ without overflow; 1 at θ = 0."""
    theta = np.asarray(theta, dtype=float)
    out = np.ones_like(theta)
    nz = theta != 0
    t = np.abs(theta[nz])
    out[nz] = 2.0 * t * np.exp(-t) / -np.expm1(-2.0 * t)
    return out


def alpha_n(n: int, rtol: float = 1e-12) -> float:
    """α_n = ∫_0^∞ (θ / sinh θ)^n dθ by adaptive Gauss-Kronrod."""
    if n < 1:
        raise ValueError("n must be >= 1")
    val, _ = gauss_kronrod(lambda th: _theta_over_sinh(th) ** n, 0.0, math.inf, rtol=rtol)
    return val


def _cn_term(s, n: int):
    return comb(s + n - 1, n - 1, exact=False) * (2.0 * s + n) ** (-(n + 1))


def c_n(n: int, tol: float = SERIES_TOL, cap: int = 10**7) -> tuple[float, float]:
    """C_n = Σ_{j_1..j_n >= 0} (2(j_1+...+j_n) + n)^-(n+1), with a rigorous error bound.

    Grouping by s = j_1 + ... + j_n gives Σ_s binom(s+n-1, n-1)(2s+n)^-(n+1).
    Past the point where the summand decreases, the tail after S lies between
    ∫_{S+1}^∞ and ∫_S^∞ of the same expression; the midpoint of that
    bracket is added and half its width is the returned error bound.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    # width of the bracket is about term(S) ~ s^-2 / (2^(n+1) (n-1)!)
    S = int(math.ceil(math.sqrt(1.0 / (tol * 2 ** (n + 1) * math.factorial(n - 1))))) + 4 * n
    if S > cap:
        raise SeriesError(f"tail bound {tol} needs {S} terms, above cap {cap}")
    s = np.arange(S + 1, dtype=float)
    terms = _cn_term(s, n)
    if np.any(np.diff(terms[2 * n :]) > 0):
        raise SeriesError("summand is not decreasing on the tail")
    partial = math.fsum(terms)

    def f(x):
        return float(_cn_term(x, n))

    upper, _ = quad(f, S, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    lower = upper - quad(f, S, S + 1, epsabs=1e-16, epsrel=1e-13)[0]
    width = upper - lower
    if width > 2 * tol:
        raise SeriesError(f"tail bracket {width:.3e} wider than {2 * tol:.1e}")
    return partial + 0.5 * (upper + lower), 0.5 * width


def hansson_laptev_constant(n: int, volume: float) -> float:
    """A with λ_k >= A k^(1/(n+1)): (2π)^(n+1)(n+1)^(n+2) / (2 C_n (n+2)^(n+1) |Ω|), to the 1/(n+1)."""
    C, _ = c_n(n)
    base = (2 * math.pi) ** (n + 1) * (n + 1) ** (n + 2) / (2.0 * C * (n + 2) ** (n + 1) * volume)
    return base ** (1.0 / (n + 1))


def explicit_sum_constant(n: int, volume: float) -> float:
    """B with Σ_{j<=k} λ_j >= B k^(1+1/(n+1)), from comparison with the global heat kernel."""
    a = alpha_n(n)
    return 4 * math.pi * (n + 1) * math.exp(-1.0) / (a * volume) ** (1.0 / (n + 1))
