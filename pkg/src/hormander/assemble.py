"""Discrete Dirichlet form  u -> Σ_i |G_i u|^2  for  -Δ_X = Σ X_i* X_i.

G_i is a forward difference with the coefficient of each step taken at the
midpoint of that step:

    (G_i u)(p) = Σ_k a_ik(p + h_k e_k / 2) (u(p + e_k) - u(p)) / h_k

with u = 0 outside the interior. One row per lattice node p whose stencil
touches the interior, including nodes on the lower boundary faces, so that
for X = (∂_x, ∂_y) the form is exactly the 5-point Laplacian.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .fields import FieldSystem, VectorFieldExpr
from .geometry import Grid, lattice_points


class ConnectivityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DiscreteField:
    """Sparse G_i; ``row_nodes`` are the flat lattice indices of its rows."""

    matrix: sp.csr_matrix
    row_nodes: np.ndarray

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def triplets(self):
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))


@dataclass(frozen=True)
class DiscreteOperator:
    matrix: sp.csr_matrix
    scale: float
    grid: Grid

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def dump(self, path: str | Path) -> None:
        dump_matrix(self.matrix, path)


def _row_candidates(grid: Grid) -> np.ndarray:
    """Flat indices of nodes p with p_k < R_k on every axis."""
    idx, _ = lattice_points(grid.spec, grid.resolution)
    ok = np.all(idx < np.asarray(grid.resolution), axis=1)
    return np.flatnonzero(ok)


def discretize_field(field: VectorFieldExpr, grid: Grid, _candidates=None) -> DiscreteField:
    if field.dim != grid.dim:
        raise ValueError(f"field of dimension {field.dim} on a {grid.dim}-dimensional grid")
    cand = _row_candidates(grid) if _candidates is None else _candidates
    _, X = lattice_points(grid.spec, grid.resolution)
    Xc = X[cand]
    coef = np.zeros((len(cand), grid.dim))
    for k, a in enumerate(field.components):
        if a.is_zero():
            continue
        mid = Xc.copy()
        mid[:, k] += 0.5 * grid.spacing[k]
        coef[:, k] = a.evaluate_array(mid)
    rows, cols, vals = _kernels.stencil_rows(
        cand.astype(np.int64), grid.index, grid.strides, coef, 1.0 / grid.spacing
    )
    used = np.unique(rows)
    remap = np.full(len(cand), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    G = sp.csr_matrix((vals, (remap[rows], cols)), shape=(len(used), grid.size))
    G.sum_duplicates()
    G.sort_indices()
    return DiscreteField(G, cand[used])


def _sum_ordered(I, J, V, n):
    """COO -> CSR with duplicates summed in their original order (bit-reproducible)."""
    order = np.lexsort((J, I))
    I, J, V = I[order], J[order], V[order]
    if len(I) == 0:
        return sp.csr_matrix((n, n))
    new = np.empty(len(I), dtype=bool)
    new[0] = True
    new[1:] = (I[1:] != I[:-1]) | (J[1:] != J[:-1])
    starts = np.flatnonzero(new)
    sums = _kernels.segment_sums(V, starts)
    rows, cols = I[starts], J[starts]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return sp.csr_matrix((sums, cols, indptr), shape=(n, n))


def assemble_operator(system: FieldSystem, grid: Grid, check_connectivity: bool = True) -> DiscreteOperator:
    """A = Σ_i G_i^T G_i, built pairwise per row so that A == A.T bit for bit."""
    if system.dim != grid.dim:
        raise ValueError(f"{system.dim}-dimensional fields on a {grid.dim}-dimensional grid")
    cand = _row_candidates(grid)
    parts = []
    for f in system.fields:
        G = discretize_field(f, grid, cand).matrix
        parts.append(_kernels.gram_triplets(G.indptr.astype(np.int64), G.indices.astype(np.int64), G.data))
    I = np.concatenate([p[0] for p in parts])
    J = np.concatenate([p[1] for p in parts])
    V = np.concatenate([p[2] for p in parts])
    A = _sum_ordered(I, J, V, grid.size)
    A.eliminate_zeros()
    op = DiscreteOperator(A, grid.volume_element, grid)
    if check_connectivity:
        _check_connectivity(op)
    return op


def lattice_components(grid: Grid) -> int:
    """Connected components of the interior nodes under nearest-neighbour adjacency."""
    rows, cols = [], []
    for k in range(grid.dim):
        nb = grid.index[np.ravel_multi_index(grid.lattice.T, grid.shape) + grid.strides[k]]
        ok = nb >= 0
        rows.append(np.flatnonzero(ok))
        cols.append(nb[ok])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    adj = sp.csr_matrix((np.ones(len(r)), (r, c)), shape=(grid.size, grid.size))
    return connected_components(adj, directed=False)[0]


def _check_connectivity(op: DiscreteOperator) -> None:
    ncomp = connected_components(op.matrix, directed=False)[0]
    expected = lattice_components(op.grid)
    if ncomp > expected:
        warnings.warn(
            f"operator graph has {ncomp} components, interior lattice has {expected}",
            ConnectivityWarning,
            stacklevel=3,
        )


def dump_matrix(A: sp.spmatrix, target) -> None:
    """Coordinate text: one "row col value" per line, 17 significant digits.

    ``target`` is a path or an open text stream.
    """
    coo = sp.coo_matrix(A)
    lines = (f"{i} {j} {v:.17g}\n" for i, j, v in zip(coo.row, coo.col, coo.data))
    if hasattr(target, "write"):
        target.writelines(lines)
        return
    with open(target, "w") as fh:
        fh.writelines(lines)


def load_matrix(path: str | Path, n: int | None = None) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((n or 0, n or 0))
    I = data[:, 0].astype(np.int64)
    J = data[:, 1].astype(np.int64)
    size = n if n is not None else int(max(I.max(), J.max())) + 1
    return sp.csr_matrix((data[:, 2], (I, J)), shape=(size, size))
