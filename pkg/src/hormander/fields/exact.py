"""Rank and determinant of small matrices, exact or with a singular-value cutoff."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

#: Relative singular-value cutoff used whenever a matrix holds floats.
RANK_RTOL = 1e-10


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over Q by Gaussian elimination."""
    m = [list(r) for r in rows if any(r)]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(m)) if m[i][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        p = m[rank]
        for i in range(rank + 1, len(m)):
            f = m[i][col]
            if f:
                f = f / p[col]
                m[i] = [a - f * b for a, b in zip(m[i], p)]
        rank += 1
        if rank == len(m):
            break
    return rank


def exact_det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant over Q by Gaussian elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if m[i][col]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        p = m[col]
        det *= p[col]
        for i in range(col + 1, n):
            f = m[i][col]
            if f:
                f = f / p[col]
                m[i] = [a - f * b for a, b in zip(m[i], p)]
    return det


def float_rank(rows, rtol: float = RANK_RTOL, scale: float | None = None) -> int:
    """Numerical rank: singular values above ``rtol`` times the largest one.

    ``scale`` overrides the reference singular value, which lets a caller
    rank several sub-matrices against one common magnitude.
    """
    a = np.asarray(rows, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    ref = s[0] if scale is None else scale
    if ref == 0.0:
        return 0
    return int(np.sum(s > rtol * ref))
