"""Discrete gradients, the assembled quadratic form and the two kernel backends."""

import io
import os
import subprocess
import sys
from fractions import Fraction as F

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from hormander import _kernels, systems
from hormander.assemble import (
    ConnectivityWarning,
    assemble_operator,
    discretize_field,
    dump_matrix,
    lattice_components,
    load_matrix,
)
from hormander.fields import FieldSystem, Polynomial, VectorFieldExpr, constant_field
from hormander.geometry import DomainSpec, build_grid

UNIT_SQUARE = DomainSpec(((F(0), F(1)), (F(0), F(1))))


def _line(R=4, length=4):
    return build_grid(DomainSpec(((F(0), F(length)),)), R)


def _bundled_operator(name, R):
    b = systems.bundled(name)
    return assemble_operator(b.system, build_grid(b.domain, R))


# -- discretize_field ------------------------------------------------------------


def test_dx_on_three_interior_nodes():
    G = discretize_field(constant_field(1, 0), _line()).matrix.toarray()
    # the first row is the forward difference out of the left boundary node
    assert np.array_equal(G[0], [1, 0, 0])
    assert np.array_equal(G[1:], [[-1, 1, 0], [0, -1, 1], [0, 0, -1]])


def test_rows_have_at_most_2n_entries():
    b = systems.bundled("grushin2d")
    grid = build_grid(b.domain, 32)
    for f in b.system.fields:
        G = discretize_field(f, grid).matrix
        assert np.diff(G.indptr).max() <= 2 * grid.dim


def test_grushin_row_uses_midpoint_coefficient():
    grid = build_grid(DomainSpec(((F(-1), F(1)), (F(-1), F(1)))), 8)
    X2 = systems.grushin2d().fields[1]
    d = discretize_field(X2, grid)
    G = d.matrix.tocsr()
    h = grid.spacing[1]
    for r, node in enumerate(d.row_nodes):
        x1 = -1 + 0.25 * (node // grid.strides[0])
        vals = G.data[G.indptr[r] : G.indptr[r + 1]]
        assert np.allclose(np.abs(vals), abs(x1) / h)


def test_zero_field_gives_zero_matrix():
    grid = build_grid(UNIT_SQUARE, 8)
    assert discretize_field(VectorFieldExpr.zero(2), grid).matrix.nnz == 0
    op = assemble_operator(FieldSystem(2, (VectorFieldExpr.zero(2),)), grid, check_connectivity=False)
    assert op.matrix.nnz == 0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        discretize_field(constant_field(3, 0), build_grid(UNIT_SQUARE, 8))
    with pytest.raises(ValueError):
        assemble_operator(systems.heisenberg(1), build_grid(UNIT_SQUARE, 8))


# -- assemble_operator -----------------------------------------------------------


def test_1d_operator_is_tridiagonal():
    op = assemble_operator(FieldSystem(1, (constant_field(1, 0),)), _line())
    assert np.array_equal(op.matrix.toarray(), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])


def test_laplacian_is_the_five_point_stencil():
    R = 8
    grid = build_grid(UNIT_SQUARE, R)
    A = assemble_operator(systems.laplacian2d(), grid).matrix.toarray()
    T = 2 * np.eye(R - 1) - np.eye(R - 1, k=1) - np.eye(R - 1, k=-1)
    five = (np.kron(T, np.eye(R - 1)) + np.kron(np.eye(R - 1), T)) * R**2
    assert np.allclose(A, five, rtol=0, atol=1e-9 * R**2)
    centre = grid.index[4 * grid.strides[0] + 4 * grid.strides[1]]
    row = A[centre]
    assert np.allclose(sorted(row[row != 0] / R**2), [-1, -1, -1, -1, 4])


@pytest.mark.parametrize("name, R", [("grushin2d", 48), ("heisenberg1", 10), ("example82", 8), ("grushin3d", 10)])
def test_exact_symmetry_and_psd(name, R):
    A = _bundled_operator(name, R).matrix
    assert (A != A.T).nnz == 0
    rng = np.random.default_rng(7)
    norm = sp.linalg.norm(A)
    for _ in range(100):
        u = rng.standard_normal(A.shape[0])
        assert u @ (A @ u) >= -1e-12 * norm * (u @ u)


def test_grushin_smallest_eigenvalue_positive():
    A = _bundled_operator("grushin2d", 48).matrix
    lam = eigsh(A.tocsc(), k=1, sigma=0, which="LM", v0=np.ones(A.shape[0]))[0][0]
    assert lam > 1.0


def test_laplacian_eigenvalues_second_order():
    errs = []
    for R in (16, 32, 64):
        A = assemble_operator(systems.laplacian2d(), build_grid(UNIT_SQUARE, R)).matrix
        lam = np.sort(eigsh(A.tocsc(), k=3, sigma=0, which="LM", v0=np.ones(A.shape[0]))[0])
        errs.append(np.abs(lam - np.pi**2 * np.array([2, 5, 5])))
    errs = np.array(errs)
    order = np.log2(errs[:-1] / errs[1:])
    assert np.all(order >= 1.9)


@pytest.mark.parametrize("c", [F(3), F(-1, 2)])
def test_field_scaling_scales_operator(c):
    sys = systems.grushin2d()
    grid = build_grid(systems.bundled("grushin2d").domain, 24)
    A = assemble_operator(sys, grid).matrix
    scaled = FieldSystem(2, tuple(f.scale(c) for f in sys.fields), 2)
    B = assemble_operator(scaled, grid).matrix
    assert np.allclose((B - float(c) ** 2 * A).data, 0, atol=1e-9 * abs(A).max())


def test_connectivity_warning_for_disconnected_operator():
    # x1 d/dx2 alone never links different x1 columns
    sys = FieldSystem(2, (VectorFieldExpr(2, (Polynomial.zero(2), Polynomial.variable(2, 0))),))
    with pytest.warns(ConnectivityWarning):
        assemble_operator(sys, build_grid(UNIT_SQUARE, 8))


def test_lattice_components_of_square():
    assert lattice_components(build_grid(UNIT_SQUARE, 8)) == 1


def test_matrix_text_roundtrip(tmp_path):
    A = _bundled_operator("grushin2d", 16).matrix
    path = tmp_path / "A.txt"
    dump_matrix(A, path)
    B = load_matrix(path, A.shape[0])
    assert (A != B).nnz == 0
    buf = io.StringIO()
    dump_matrix(A, buf)
    assert buf.getvalue() == path.read_text()


# -- backend parity --------------------------------------------------------------


@pytest.mark.skipif(not _kernels.USE_NUMBA, reason="numba backend not active")
@pytest.mark.parametrize("name, R", [("grushin2d", 40), ("heisenberg1", 8), ("example82", 8)])
def test_numpy_kernels_match_numba(monkeypatch, name, R):
    A = _bundled_operator(name, R).matrix
    for key, fn in _kernels.NUMPY_KERNELS.items():
        monkeypatch.setattr(_kernels, key, fn)
    B = _bundled_operator(name, R).matrix
    assert np.array_equal(A.indptr, B.indptr) and np.array_equal(A.indices, B.indices)
    assert np.array_equal(A.data, B.data)


@pytest.mark.skipif(not _kernels.JIT_KERNELS, reason="numba not installed")
def test_heat_sums_parity():
    rng = np.random.default_rng(3)
    vals = np.sort(rng.uniform(1, 500, 300))
    w = rng.uniform(0, 2, (5, 300))
    t = np.geomspace(1e-3, 1, 17)
    a = _kernels.JIT_KERNELS["heat_sums"](vals, w, t)
    b = _kernels.NUMPY_KERNELS["heat_sums"](vals, w, t)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_env_flag_selects_numpy_backend(tmp_path):
    code = (
        "import sys\n"
        "from hormander import _kernels, systems\n"
        "from hormander.assemble import assemble_operator, dump_matrix\n"
        "from hormander.geometry import build_grid\n"
        "b = systems.bundled('grushin2d')\n"
        "dump_matrix(assemble_operator(b.system, build_grid(b.domain, 24)).matrix, sys.argv[1])\n"
        "print(_kernels.backend())\n"
    )
    outs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, HORMANDER_NUMBA=flag)
        path = tmp_path / f"A{flag}.txt"
        res = subprocess.run([sys.executable, "-c", code, str(path)], env=env, capture_output=True, text=True, check=True)
        outs[flag] = (res.stdout.strip(), path.read_text())
    assert outs["0"][0] == "numpy"
    assert outs["0"][1] == outs["1"][1]
