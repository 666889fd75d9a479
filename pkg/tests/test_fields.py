"""Brackets, commutator bases and the pointwise indices."""

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hormander import systems
from hormander.fields import (
    FieldSystem,
    HormanderError,
    Polynomial,
    VectorFieldExpr,
    bracket,
    capital_lambda,
    capital_lambda_terms,
    constant_field,
    enumerate_commutators,
    exact_det,
    exact_rank,
    lambda_I,
    metivier_condition_check,
    metivier_index,
    nu_via_determinants,
    point_indices,
)


# -- strategies ------------------------------------------------------------------

fractions = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@st.composite
def polynomials(draw, n, max_degree=3, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exps = draw(st.lists(st.integers(0, max_degree), min_size=n, max_size=n))
        if sum(exps) <= max_degree:
            terms[tuple(exps)] = draw(fractions)
    return Polynomial(n, terms)


@st.composite
def fields(draw, n):
    return VectorFieldExpr(n, tuple(draw(polynomials(n)) for _ in range(n)))


dims = st.integers(1, 3)


# -- bracket ---------------------------------------------------------------------


def test_commuting_constant_fields():
    assert bracket(constant_field(2, 0), constant_field(2, 1)).is_zero()


def test_product_rule_bracket():
    X2 = VectorFieldExpr(2, (Polynomial.zero(2), Polynomial.variable(2, 0)))
    assert bracket(constant_field(2, 0), X2) == constant_field(2, 1)


def test_heisenberg_bracket_is_minus_four_dz():
    X, Y = systems.heisenberg(1).fields
    assert bracket(X, Y) == constant_field(3, 2, -4)


def test_bracket_dimension_mismatch():
    with pytest.raises(ValueError):
        bracket(constant_field(2, 0), constant_field(3, 0))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_bracket_antisymmetry(data):
    n = data.draw(dims)
    v, w = data.draw(fields(n)), data.draw(fields(n))
    assert (bracket(v, w) + bracket(w, v)).is_zero()


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_jacobi_identity(data):
    n = data.draw(dims)
    u, v, w = (data.draw(fields(n)) for _ in range(3))
    total = bracket(u, bracket(v, w)) + bracket(v, bracket(w, u)) + bracket(w, bracket(u, v))
    assert total.is_zero()


# -- enumeration -----------------------------------------------------------------


def test_grushin_basis_q2():
    basis = enumerate_commutators(systems.grushin2d(), 2)
    words = [e.word for e in basis.entries]
    assert words == [(0,), (1,), (0, 0), (0, 1), (1, 1)]
    assert basis.degrees == (1, 1, 2, 2, 2)
    assert [e.is_zero for e in basis.entries] == [False, False, True, False, True]
    assert basis.entries[3].expr == constant_field(2, 1)


def test_single_field_higher_brackets_vanish():
    sys1 = FieldSystem(1, (constant_field(1, 0),), 3)
    basis = enumerate_commutators(sys1, 3)
    assert [e.is_zero for e in basis.entries if e.degree >= 2] == [True, True]


def test_heisenberg_basis_contains_minus_four_dz():
    basis = enumerate_commutators(systems.heisenberg(1), 2)
    assert any(e.expr == constant_field(3, 2, -4) for e in basis.of_degree(2))


def test_enumerate_rejects_q0():
    with pytest.raises(ValueError):
        enumerate_commutators(systems.grushin2d(), 0)


# -- determinants and Λ ----------------------------------------------------------


@pytest.fixture(scope="module")
def grushin_basis():
    return enumerate_commutators(systems.grushin2d(), 2)


def test_lambda_I_examples(grushin_basis):
    assert lambda_I(grushin_basis, (0, 1), (F(2), F(0))) == 2
    assert lambda_I(grushin_basis, (1, 1), (F(2), F(3))) == 0
    assert lambda_I(grushin_basis, (0, 3), (F(-5, 7), F(1, 3))) == 1


def test_capital_lambda_single_field():
    basis = enumerate_commutators(FieldSystem(1, (constant_field(1, 0),), 1))
    assert capital_lambda(basis, (F(1, 3),), F(2, 5)) == F(2, 5)


def test_capital_lambda_grushin_origin(grushin_basis):
    assert capital_lambda(grushin_basis, (F(0), F(0)), F(1, 2)) == F(1, 4)


@settings(max_examples=80, deadline=None)
@given(fractions, fractions, st.fractions(min_value=F(1, 50), max_value=5, max_denominator=50))
def test_capital_lambda_grushin_formula(x1, x2, r):
    basis = enumerate_commutators(systems.grushin2d(), 2)
    assert capital_lambda(basis, (x1, x2), r) == 2 * (abs(x1) * r**2 + r**3)


def test_capital_lambda_terms(grushin_basis):
    assert capital_lambda_terms(grushin_basis, (F(1, 2), F(0))) == {2: 1.0, 3: 2.0}


def test_capital_lambda_rejects_nonpositive_r(grushin_basis):
    with pytest.raises(ValueError):
        capital_lambda(grushin_basis, (F(0), F(0)), 0)


@pytest.mark.parametrize("x", [(0.0, 0.0), (0.3, -0.2), (-1.0, 0.5)])
def test_capital_lambda_small_r_slope(grushin_basis, x):
    r = np.logspace(-6, -3, 8)
    lam = [capital_lambda(grushin_basis, x, float(v)) for v in r]
    slope = np.polyfit(np.log(r), np.log(lam), 1)[0]
    assert abs(slope - point_indices(grushin_basis, x).nu) < 1e-3
    assert np.all(np.diff(lam) > 0)


# -- exact linear algebra --------------------------------------------------------


def test_exact_rank_and_det():
    rows = [[F(1), F(2)], [F(2), F(4)]]
    assert exact_rank(rows) == 1
    assert exact_det(rows) == 0
    assert exact_det([[F(1, 2), F(1)], [F(0), F(3)]]) == F(3, 2)


# -- indices ---------------------------------------------------------------------


@pytest.mark.parametrize("x, layers, nu", [((1, 0), (2, 2), 2), ((0, 5), (1, 2), 3)])
def test_grushin_point_indices(grushin_basis, x, layers, nu):
    pi = point_indices(grushin_basis, tuple(F(v) for v in x))
    assert pi.layer_dims == layers
    assert pi.nu == nu
    assert nu_via_determinants(grushin_basis, tuple(F(v) for v in x)) == nu


def test_heisenberg_indices():
    basis = enumerate_commutators(systems.heisenberg(1))
    for x in systems.HEISENBERG_SAMPLES:
        pi = point_indices(basis, x)
        assert pi.layer_dims == (2, 3) and pi.nu == 4
        assert nu_via_determinants(basis, x) == 4
    assert metivier_condition_check(basis, list(systems.HEISENBERG_SAMPLES)) == [True, True]


def test_example82_indices():
    basis = enumerate_commutators(systems.example82())
    assert point_indices(basis, (F(0), F(0), F(-1, 2))).nu == 4
    assert point_indices(basis, (F(0), F(0), F(1, 2))).nu == 3
    nu_tilde, flags = metivier_index(basis, list(systems.EXAMPLE82_IN_H + systems.EXAMPLE82_OFF_H))
    assert nu_tilde == 4
    assert flags == [True] * 10 + [False] * 10


def test_grushin_metivier_index_flags_the_line(grushin_basis):
    samples = [(F(a, 4), F(b, 4)) for a in range(-2, 3) for b in range(-2, 3)]
    nu_tilde, flags = metivier_index(grushin_basis, samples)
    assert nu_tilde == 3
    assert flags == [x[0] == 0 for x in samples]
    assert metivier_condition_check(grushin_basis, samples) == [False, True]


def test_laplacian_metivier_condition():
    basis = enumerate_commutators(systems.laplacian2d())
    assert metivier_condition_check(basis, [(F(0), F(0)), (F(1, 3), F(-2))]) == [True]


def test_hormander_failure():
    sys1 = FieldSystem(2, (constant_field(2, 0),), 2)
    basis = enumerate_commutators(sys1)
    with pytest.raises(HormanderError, match="within Q"):
        nu_via_determinants(basis, (F(0), F(0)))
    with pytest.raises(HormanderError):
        metivier_index(basis, [(F(0), F(0))])


def test_float_path_matches_exact(grushin_basis):
    assert point_indices(grushin_basis, (0.0, 0.4)).nu == 3
    assert point_indices(grushin_basis, (0.25, 0.4)).nu == 2
    assert nu_via_determinants(grushin_basis, (0.25, 0.4)) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2), st.fractions(min_value=-4, max_value=4, max_denominator=5).filter(bool))
def test_field_rescaling_keeps_indices(j, c):
    sys = systems.grushin3d()
    base = enumerate_commutators(sys)
    scaled = enumerate_commutators(sys.scaled(j, c))
    pts = [(F(0), F(0), F(0)), (F(1, 2), F(0), F(1, 3)), (F(0), F(-1, 2), F(1))]
    for x in pts:
        assert point_indices(base, x).layer_dims == point_indices(scaled, x).layer_dims
    assert metivier_index(base, pts) == metivier_index(scaled, pts)


def test_field_system_json_roundtrip(tmp_path):
    for sys in (systems.grushin2d(), systems.heisenberg(1), systems.example82()):
        path = tmp_path / "fs.json"
        sys.dump(path)
        back = FieldSystem.load(path)
        assert back.dim == sys.dim and back.hormander_bound == sys.hormander_bound
        X = np.full((1, sys.dim), 1.0 / 3.0)
        for a, b in zip(back.fields, sys.fields):
            assert np.array_equal(a.evaluate_array(X), b.evaluate_array(X))


def test_field_system_json_rejects_garbage():
    with pytest.raises(ValueError):
        FieldSystem.from_json({"dim": 2})
