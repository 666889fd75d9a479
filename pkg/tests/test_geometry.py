"""Domains, lattices, boundary checks, |H| and condition (A)."""

import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from hormander import systems
from hormander.fields import FieldSystem, constant_field, enumerate_commutators
from hormander.geometry import (
    CharacteristicWarning,
    DomainSpec,
    GridError,
    ball_mask,
    boundary_samples,
    build_grid,
    characteristic_check,
    condition_A_integral,
    measure_H,
)

UNIT_SQUARE = DomainSpec(((F(0), F(1)), (F(0), F(1))))
OFFSET_DISC = DomainSpec(((F(-1), F(2)), (F(-3, 2), F(3, 2))), ball_mask((F(3, 10), F(0)), 1))


def test_unit_square_interior_count():
    grid = build_grid(UNIT_SQUARE, 8)
    assert grid.size == 49
    assert grid.volume_element == pytest.approx(1 / 64)
    assert sorted(set(grid.lattice[:, 0])) == list(range(1, 8))


def test_disc_count_matches_brute_force_scan():
    grid = build_grid(OFFSET_DISC, 64)
    count = 0
    for i in range(1, 64):
        for j in range(1, 64):
            x = F(-1) + F(3 * i, 64)
            y = F(-3, 2) + F(3 * j, 64)
            count += (x - F(3, 10)) ** 2 + y**2 - 1 < 0
    assert grid.size == count


def test_grid_index_is_a_bijection():
    grid = build_grid(OFFSET_DISC, 32)
    rows = grid.index[grid.index >= 0]
    assert np.array_equal(np.sort(rows), np.arange(grid.size))
    flat = grid.lattice @ grid.strides
    assert np.array_equal(grid.index[flat], np.arange(grid.size))


def test_grid_exact_node_matches_float_node():
    grid = build_grid(OFFSET_DISC, 16)
    for row in (0, grid.size // 2, grid.size - 1):
        assert np.allclose([float(v) for v in grid.exact_node(row)], grid.nodes[row], atol=1e-15)


@pytest.mark.parametrize("res", [2, 3])
def test_resolution_too_small(res):
    with pytest.raises(GridError, match="empty interior"):
        build_grid(UNIT_SQUARE, res)


def test_interior_count_monotone_under_refinement():
    sizes = [build_grid(OFFSET_DISC, r).size for r in (8, 16, 32, 64)]
    assert sizes == sorted(sizes)


def test_domain_json_roundtrip(tmp_path):
    doc = OFFSET_DISC.to_json([32, 32])
    path = tmp_path / "domain.json"
    path.write_text(json.dumps(doc))
    back, res = DomainSpec.load(path)
    assert back.box == OFFSET_DISC.box and res == [32, 32]
    assert build_grid(back, 32).size == build_grid(OFFSET_DISC, 32).size


def test_empty_box_rejected():
    with pytest.raises(ValueError):
        DomainSpec(((F(1), F(1)),))


# -- characteristic boundary -----------------------------------------------------


def test_offset_disc_is_non_characteristic_for_grushin():
    rep = characteristic_check(OFFSET_DISC, systems.grushin2d())
    assert not rep.characteristic and rep.min_normal_component > 0.1


def test_centered_disc_is_characteristic_for_grushin():
    disc = DomainSpec(((F(-1), F(1)), (F(-1), F(1))), ball_mask((F(0), F(0)), 1))
    with pytest.warns(CharacteristicWarning):
        rep = characteristic_check(disc, systems.grushin2d())
    assert rep.characteristic
    assert abs(rep.at_point[0]) < 1e-12 and abs(abs(rep.at_point[1]) - 1) < 1e-12


def test_laplacian_normal_component_is_one():
    rep = characteristic_check(OFFSET_DISC, systems.laplacian2d())
    assert rep.min_normal_component == pytest.approx(1.0, abs=1e-12)


def test_boundary_samples_lie_on_the_level_set():
    pts = boundary_samples(OFFSET_DISC, 200)
    assert 0 < len(pts) <= 200
    assert np.max(np.abs(OFFSET_DISC.mask.evaluate_array(pts))) < 1e-10


def test_boundary_samples_need_a_mask():
    with pytest.raises(ValueError):
        boundary_samples(UNIT_SQUARE)


# -- measure of H ----------------------------------------------------------------


def test_heisenberg_H_is_everything():
    b = systems.bundled("heisenberg1")
    h = measure_H(enumerate_commutators(b.system), b.domain, 4, 4)
    assert h.fractions == (1.0, 1.0, 1.0) and h.verdict == "positive"


def test_grushin_H_has_zero_measure():
    b = systems.bundled("grushin2d")
    h = measure_H(enumerate_commutators(b.system), b.domain, 3, 8)
    assert h.verdict == "zero" and h.is_positive is False


def test_grushin_H_fraction_decays_on_a_lattice_through_the_line():
    # box symmetric about x1 = 0 with an odd cell count per axis puts centers on the line
    dom = DomainSpec(((F(-1), F(1)), (F(-1), F(1))))
    h = measure_H(enumerate_commutators(systems.grushin2d()), dom, 3, 5)
    # 5, 10, 20 cells: only the odd count has a column of centers on x1 = 0
    assert h.fractions[0] == pytest.approx(1 / 5)
    assert h.fractions[1] == 0.0 and h.verdict == "zero"


def test_example82_H_fraction_on_D2():
    b = systems.bundled("example82")
    h = measure_H(enumerate_commutators(b.system), b.H_domain, 4, 8)
    assert h.verdict == "positive"
    assert h.fractions[-1] == pytest.approx(math.pi * 2.25 / 64, abs=0.01)


# -- condition (A) ---------------------------------------------------------------


def test_condition_A_laplacian_is_the_volume():
    res = condition_A_integral(systems.laplacian2d(), UNIT_SQUARE, levels=4)
    assert res.verdict == res.numerical_verdict == "convergent"
    assert res.estimate == pytest.approx(1.0, abs=1e-12)


def test_condition_A_grushin2d_divergent():
    b = systems.bundled("grushin2d")
    res = condition_A_integral(b.system, b.domain, levels=6)
    assert res.numerical_verdict == "divergent" and res.verdict == "divergent"
    assert res.source == "known"


def test_condition_A_grushin3d_convergent():
    b = systems.bundled("grushin3d")
    res = condition_A_integral(b.system, b.domain, levels=4)
    assert res.numerical_verdict == "convergent" and res.verdict == "convergent"
    assert math.isfinite(res.estimate)


def test_condition_A_open_zero_set_is_divergent():
    # two parallel fields: every 2x2 determinant vanishes identically
    sys = FieldSystem(2, (constant_field(2, 0), constant_field(2, 0, 2)), 1, "parallel")
    res = condition_A_integral(sys, UNIT_SQUARE, levels=3)
    assert res.verdict == "divergent" and res.source == "numerical"
    assert res.zero_fraction == 1.0


def test_divergent_A_implies_zero_H_on_bundled_systems():
    for name, nu_tilde in (("grushin2d", 3), ("grushin3d", 4), ("laplacian2d", 2)):
        b = systems.bundled(name)
        A = condition_A_integral(b.system, b.domain, levels=3)
        if A.verdict == "divergent":
            assert measure_H(enumerate_commutators(b.system), b.domain, nu_tilde, 8).verdict == "zero"
