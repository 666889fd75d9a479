"""Lowest eigenpairs of the assembled operator and the counting function.

Two solvers are provided. ``lobpcg`` is a blocked preconditioned conjugate
gradient eigen-iteration with a Jacobi preconditioner and locking. It needs
no factorization but its cost grows with the block size. ``shift-invert``
runs ARPACK on (A - 0)^-1 through a sparse LU and is the practical choice
for hundreds of eigenpairs. Both start from a seeded random block, so
results are reproducible for fixed inputs.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

#: above this many requested pairs ``method="auto"`` switches to shift-invert
LOBPCG_MAX_K = 40


class EigenError(RuntimeError):
    """The iteration cap was reached; ``residuals`` holds the last residual norms."""

    def __init__(self, message: str, residuals):
        super().__init__(message)
        self.residuals = np.asarray(residuals)


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray | None
    residuals: np.ndarray
    grid_ref: dict = field(default_factory=dict)
    method: str = ""
    iterations: int = 0

    @property
    def K(self) -> int:
        return len(self.values)

    def truncated(self, K: int) -> "Spectrum":
        vec = None if self.vectors is None else self.vectors[:, :K]
        return Spectrum(self.values[:K], vec, self.residuals[:K], self.grid_ref, self.method, self.iterations)

    def without_vectors(self) -> "Spectrum":
        return Spectrum(self.values, None, self.residuals, self.grid_ref, self.method, self.iterations)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "lambda", "residual"])
            for k, (v, r) in enumerate(zip(self.values, self.residuals), start=1):
                w.writerow([k, f"{v:.17g}", f"{r:.6e}"])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Spectrum":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        vals = np.array([float(r["lambda"]) for r in rows])
        res = np.array([float(r["residual"]) for r in rows])
        return cls(vals, None, res)


def counting_function(spec: Spectrum, lam: float) -> int:
    """N(λ) = #{j : λ_j <= λ} from a truncated spectrum."""
    if lam > spec.values[-1]:
        raise ValueError(f"lambda={lam} beyond computed spectrum (lambda_K={spec.values[-1]})")
    return int(np.searchsorted(spec.values, lam, side="right"))


# -- helpers -----------------------------------------------------------------


def _as_matrix(A) -> sp.csr_matrix:
    M = getattr(A, "matrix", A)
    return sp.csr_matrix(M)


def _normalize_signs(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return V * s


def _residuals(A, V, w) -> np.ndarray:
    return np.linalg.norm(A @ V - V * w, axis=0)


def _svqb(S: np.ndarray, drop: float) -> np.ndarray:
    d = np.sqrt(np.einsum("ij,ij->j", S, S))
    d[d == 0] = 1.0
    S = S / d
    G = S.T @ S
    theta, U = la.eigh(0.5 * (G + G.T))
    keep = theta > drop * theta[-1]
    return S @ (U[:, keep] / np.sqrt(theta[keep]))


def _orthonormalize(S: np.ndarray, drop: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of range(S): two passes of SVQB, dropping near-dependent directions."""
    return _svqb(_svqb(S, drop), 1e-14)


def _rayleigh_ritz(A, V):
    AV = A @ V
    H = V.T @ AV
    H = 0.5 * (H + H.T)
    w, C = la.eigh(H)
    return w, V @ C, AV @ C


# -- solvers -----------------------------------------------------------------


def lobpcg(
    A, K: int, tol: float = 1e-8, seed: int = 0, maxiter: int = 500, block: int | None = None, floor: float = 1.0
):
    """Locked block LOBPCG for the K smallest eigenpairs of a symmetric PSD matrix.

    Pairs are converged when ||A x - λ x|| <= tol * max(floor, λ_K).
    Returns (values, vectors, residuals, iterations).
    """
    A = _as_matrix(A)
    N = A.shape[0]
    m = block or min(2 * K, K + 10)
    m = min(m, N // 3) if N >= 3 * K else K
    rng = np.random.default_rng(seed)
    X = _orthonormalize(rng.standard_normal((N, m)))
    diag = A.diagonal().copy()
    diag[diag == 0] = 1.0
    Minv = 1.0 / diag
    w, X, AX = _rayleigh_ritz(A, X)
    P = None
    res = np.full(K, np.inf)
    for it in range(1, maxiter + 1):
        R = AX - X * w
        norms = np.linalg.norm(R, axis=0)
        res = norms[:K]
        thresh = tol * max(floor, w[K - 1])
        if np.all(res <= thresh):
            return w[:K], X[:, :K], res, it
        active = norms > thresh
        active[K:] = True
        W = Minv[:, None] * R[:, active]
        W -= X @ (X.T @ W)
        blocks = [X, W] if P is None else [X, W, P - X @ (X.T @ P)]
        S = _orthonormalize(np.hstack(blocks))
        theta, V, AV = _rayleigh_ritz(A, S)
        Xnew, AXnew, wnew = V[:, :m], AV[:, :m], theta[:m]
        P = Xnew - X @ (X.T @ Xnew)
        # converged (locked) columns carry no search direction
        P = P[:, active & (np.linalg.norm(P, axis=0) > 1e-14)]
        X, AX, w = Xnew, AXnew, wnew
    raise EigenError(
        f"LOBPCG did not converge in {maxiter} iterations (max residual {res.max():.3e})", res
    )


def shift_invert(A, K: int, tol: float = 1e-8, seed: int = 0, maxiter: int | None = None):
    """ARPACK in shift-invert mode about 0, polished by a Rayleigh-Ritz step."""
    A = _as_matrix(A)
    N = A.shape[0]
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N)
    ncv = min(N, max(2 * K + 1, K + 40))
    try:
        w, V = eigsh(A, k=K, sigma=0.0, which="LM", v0=v0, ncv=ncv, maxiter=maxiter or 50 * N)
    except ArpackNoConvergence as exc:
        V = exc.eigenvectors
        w = exc.eigenvalues
        res = _residuals(A, V, w) if len(w) else np.full(K, np.inf)
        raise EigenError(f"ARPACK converged {len(w)} of {K} pairs", res) from exc
    V, _ = np.linalg.qr(V[:, np.argsort(w)])
    w, V, _ = _rayleigh_ritz(A, V)
    return w, V, _residuals(A, V, w), 1


def smallest_k(
    A,
    K: int,
    tol: float = 1e-8,
    seed: int = 0,
    method: str = "auto",
    keep_vectors: bool = True,
    maxiter: int = 500,
) -> Spectrum:
    """The K smallest eigenpairs, sorted ascending, with unit eigenvectors.

    Raises EigenError when the solver stops before every pair satisfies
    ||A v - λ v|| <= tol * max(1, λ_K).
    """
    M = _as_matrix(A)
    N = M.shape[0]
    if not 1 <= K <= N // 4:
        raise ValueError(f"need 1 <= K <= N/4 = {N // 4}, got K={K}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method == "auto":
        method = "lobpcg" if K <= LOBPCG_MAX_K else "shift-invert"
    # solve with A / 2^e (exact in binary), so 4^j A gives the same iterates
    top = float(np.abs(M.diagonal()).max()) if M.nnz else 0.0
    scale = 2.0 ** round(math.log2(top)) if top > 0 else 1.0
    Ms = M * (1.0 / scale)
    if method == "lobpcg":
        try:
            w, V, res, its = lobpcg(Ms, K, tol, seed, maxiter, floor=1.0 / scale)
        except EigenError as exc:
            r = exc.residuals * scale
            raise EigenError(f"LOBPCG did not converge in {maxiter} iterations (max residual {r.max():.3e})", r) from None
    elif method == "shift-invert":
        w, V, res, its = shift_invert(Ms, K, tol, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    w, res = w * scale, res * scale
    if method == "shift-invert":
        bound = tol * max(1.0, w[-1])
        if np.any(res > bound):
            raise EigenError(f"shift-invert residuals above {bound:.3e}", res)
    V = _normalize_signs(V)
    if np.any(w <= 0):
        warnings.warn("non-positive eigenvalue: operator graph may be disconnected", RuntimeWarning, stacklevel=2)
    grid = getattr(A, "grid", None)
    ref = grid.metadata() if grid is not None else {}
    return Spectrum(np.asarray(w), V if keep_vectors else None, np.asarray(res), ref, method, its)
