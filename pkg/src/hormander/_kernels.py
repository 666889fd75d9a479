"""Inner loops of operator assembly and spectral sums.

Each kernel has a numba version and a pure-numpy version with identical
results up to floating-point summation order. Set ``HORMANDER_NUMBA=0`` to
force the numpy path (also used automatically when numba is missing).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

USE_NUMBA = numba is not None and os.environ.get("HORMANDER_NUMBA", "1") != "0"


# -- forward-difference rows ------------------------------------------------------


def _stencil_rows_numpy(row_nodes, index, strides, coef, invh):
    M, n = coef.shape
    base = index[row_nodes]
    rows, cols, vals = [], [], []
    diag = np.zeros(M)
    for k in range(n):
        c = coef[:, k] * invh[k]
        diag -= c
        nb = index[row_nodes + strides[k]]
        keep = (nb >= 0) & (c != 0.0)
        rows.append(np.flatnonzero(keep))
        cols.append(nb[keep])
        vals.append(c[keep])
    keep = (base >= 0) & (diag != 0.0)
    rows.append(np.flatnonzero(keep))
    cols.append(base[keep])
    vals.append(diag[keep])
    return (
        np.concatenate(rows).astype(np.int64),
        np.concatenate(cols).astype(np.int64),
        np.concatenate(vals),
    )


def _stencil_rows_loop(row_nodes, index, strides, coef, invh):
    M, n = coef.shape
    rows = np.empty(M * (n + 1), dtype=np.int64)
    cols = np.empty(M * (n + 1), dtype=np.int64)
    vals = np.empty(M * (n + 1))
    cnt = 0
    for m in range(M):
        p = row_nodes[m]
        diag = 0.0
        for k in range(n):
            c = coef[m, k] * invh[k]
            diag -= c
            nb = index[p + strides[k]]
            if nb >= 0 and c != 0.0:
                rows[cnt] = m
                cols[cnt] = nb
                vals[cnt] = c
                cnt += 1
        me = index[p]
        if me >= 0 and diag != 0.0:
            rows[cnt] = m
            cols[cnt] = me
            vals[cnt] = diag
            cnt += 1
    return rows[:cnt], cols[:cnt], vals[:cnt]


# -- Gram matrix G^T G as triplets -------------------------------------------------


def _gram_triplets_numpy(indptr, indices, data):
    counts = np.diff(indptr)
    sq = counts * counts
    total = int(sq.sum())
    owner = np.repeat(np.arange(len(counts)), sq)
    start = np.repeat(np.cumsum(sq) - sq, sq)
    local = np.arange(total) - start
    c = counts[owner]
    a = indptr[owner] + local // np.maximum(c, 1)
    b = indptr[owner] + local % np.maximum(c, 1)
    return indices[a].astype(np.int64), indices[b].astype(np.int64), data[a] * data[b]


def _gram_triplets_loop(indptr, indices, data):
    nrows = len(indptr) - 1
    total = 0
    for r in range(nrows):
        c = indptr[r + 1] - indptr[r]
        total += c * c
    I = np.empty(total, dtype=np.int64)
    J = np.empty(total, dtype=np.int64)
    V = np.empty(total)
    cnt = 0
    for r in range(nrows):
        for a in range(indptr[r], indptr[r + 1]):
            for b in range(indptr[r], indptr[r + 1]):
                I[cnt] = indices[a]
                J[cnt] = indices[b]
                V[cnt] = data[a] * data[b]
                cnt += 1
    return I, J, V


# -- ordered duplicate summation ---------------------------------------------------


def _segment_sums_numpy(vals, starts):
    # strictly left-to-right within each segment, like the loop; np.add.reduceat
    # switches to pairwise summation on long segments and breaks bitwise parity
    lengths = np.diff(np.append(starts, len(vals)))
    out = np.zeros(len(starts))
    for j in range(int(lengths.max()) if len(lengths) else 0):
        live = lengths > j
        out[live] += vals[starts[live] + j]
    return out


def _segment_sums_loop(vals, starts):
    out = np.empty(len(starts))
    n = len(vals)
    for s in range(len(starts)):
        lo = starts[s]
        hi = starts[s + 1] if s + 1 < len(starts) else n
        acc = 0.0
        for i in range(lo, hi):
            acc += vals[i]
        out[s] = acc
    return out


# -- heat sums ---------------------------------------------------------------------


def _heat_sums_numpy(values, weights, t):
    """S[i, p] = sum_j exp(-values[j] t[i]) weights[p, j]."""
    return np.exp(-np.outer(t, values)) @ weights.T


def _heat_sums_loop(values, weights, t):
    nt = len(t)
    npnt, K = weights.shape
    out = np.zeros((nt, npnt))
    for i in range(nt):
        e = np.exp(-values * t[i])
        for p in range(npnt):
            acc = 0.0
            for j in range(K):
                acc += e[j] * weights[p, j]
            out[i, p] = acc
    return out


JIT_KERNELS: dict = {}
if numba is not None:
    _jit = numba.njit(cache=False)
    JIT_KERNELS = {
        "stencil_rows": _jit(_stencil_rows_loop),
        "gram_triplets": _jit(_gram_triplets_loop),
        "segment_sums": _jit(_segment_sums_loop),
        "heat_sums": _jit(_heat_sums_loop),
    }

if USE_NUMBA:
    stencil_rows = JIT_KERNELS["stencil_rows"]
    gram_triplets = JIT_KERNELS["gram_triplets"]
    segment_sums = JIT_KERNELS["segment_sums"]
else:
    stencil_rows = _stencil_rows_numpy
    gram_triplets = _gram_triplets_numpy
    segment_sums = _segment_sums_numpy
# exp matrix times weights is a BLAS product; the jitted loop measured ~5x slower, so both backends use numpy
heat_sums = _heat_sums_numpy

NUMPY_KERNELS = {
    "stencil_rows": _stencil_rows_numpy,
    "gram_triplets": _gram_triplets_numpy,
    "segment_sums": _segment_sums_numpy,
    "heat_sums": _heat_sums_numpy,
}


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
