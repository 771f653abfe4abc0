"""Pointwise step rules and the grid-applied game operators."""

import math

import numpy as np
import pytest

from dpplab.core import (
    Ball,
    Box,
    build_grid_domain,
    constant_field,
    disk_second_moment,
    field_from_function,
)
from dpplab.operators import (
    BallRule,
    GameSpec,
    alpha_beta_from_p,
    apply_operator,
    default_direction_count,
    disk_rule,
    move_radii,
    sphere_directions,
    step_directional,
    step_random_walk,
    step_space_dependent,
    step_tug_of_war,
)


def sq(pts):
    return np.einsum("ij,ij->i", pts, pts)


# -- mixing weights ----------------------------------------------------------


def test_alpha_beta_p2_is_pure_mean():
    assert alpha_beta_from_p(2.0, 3) == (0.0, 1.0)


def test_alpha_beta_p_inf_is_pure_tug():
    assert alpha_beta_from_p(math.inf, 2) == (1.0, 0.0)


def test_alpha_beta_p4_n2():
    a, b = alpha_beta_from_p(4.0, 2)
    assert math.isclose(a, 1.0 / 3.0) and math.isclose(b, 2.0 / 3.0)


def test_alpha_beta_sum_to_one():
    for p in (2.0, 3.0, 7.5, 40.0):
        for n in (1, 2, 3, 6):
            a, b = alpha_beta_from_p(p, n)
            assert math.isclose(a + b, 1.0)
            assert 0.0 <= a <= 1.0


def test_alpha_beta_rejects_p_below_2():
    with pytest.raises(ValueError):
        alpha_beta_from_p(1.5, 2)


# -- direction and disk quadrature -------------------------------------------


def test_sphere_directions_unit_and_antipodal():
    for n, count in ((2, 16), (3, 40), (4, 20)):
        dirs = sphere_directions(n, count)
        assert dirs.shape == (count, n)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
        # antipode of every direction is present
        for d in dirs:
            assert np.min(np.linalg.norm(dirs + d, axis=1)) < 1e-9


def test_sphere_directions_odd_count_rejected():
    with pytest.raises(ValueError):
        sphere_directions(2, 7)


def test_default_direction_count():
    assert default_direction_count(2) == 64
    assert default_direction_count(3) == 128


def test_move_radii_default_ladder():
    spec = GameSpec.directional(1.0, 0.5)
    assert np.allclose(move_radii(spec), [1.0, 0.5, 0.25, 0.0625])


def test_move_radii_properties():
    spec = GameSpec.directional(0.3, 0.5, radius_count=6)
    r = move_radii(spec)
    assert r[0] == 0.3 and r[-1] == 0.3 / 16.0
    assert np.all(np.diff(r) < 0)
    assert np.all((r > 0) & (r <= 0.3))


def test_disk_rule_n2_is_orthogonal_segment():
    pts, wts = disk_rule(2, 0.5, np.array([1.0, 0.0]))
    assert math.isclose(wts.sum(), 1.0)
    assert np.allclose(pts[:, 0], 0.0, atol=1e-15)
    assert np.all(np.abs(pts[:, 1]) <= 0.5 + 1e-12)


def test_disk_rule_orthogonality_n3():
    nu = np.array([1.0, 2.0, -0.5])
    pts, wts = disk_rule(3, 0.2, nu)
    assert math.isclose(wts.sum(), 1.0)
    assert np.max(np.abs(pts @ nu)) < 1e-12 * np.linalg.norm(nu)


def test_disk_rule_affine_exactness():
    # symmetric rule: mean of a . h + b over the disk is exactly b
    rng = np.random.default_rng(3)
    for n in (2, 3):
        nu = rng.standard_normal(n)
        a = rng.standard_normal(n)
        pts, wts = disk_rule(n, 0.7, nu)
        assert abs((pts @ a) @ wts) < 1e-12


def test_disk_rule_second_moment_n2_exact():
    # Gauss-Legendre integrates t^2 exactly on the segment
    pts, wts = disk_rule(2, 1.0, np.array([0.0, 1.0]))
    assert math.isclose(sq(pts) @ wts, disk_second_moment(2, 1.0), rel_tol=1e-12)


def test_disk_rule_second_moment_n3():
    pts, wts = disk_rule(3, 1.0, np.array([0.0, 0.0, 1.0]))
    assert math.isclose(sq(pts) @ wts, disk_second_moment(3, 1.0), rel_tol=1e-6)


# -- pointwise steps ---------------------------------------------------------


def test_step_tug_of_war_quadratic():
    # sup |y|^2 over the ball is eps^2, inf is 0
    probe = BallRule.product(2, 0.4, 41).offsets
    got = step_tug_of_war(sq, (0.0, 0.0), 0.4, probe)
    assert math.isclose(got, 0.5 * 0.4**2, rel_tol=1e-12)


def test_step_tug_of_war_rejects_escaping_probe():
    with pytest.raises(ValueError):
        step_tug_of_war(sq, (0.0, 0.0), 0.1, np.array([[0.2, 0.0]]))


def test_step_random_walk_quadratic_moment():
    # mean of |y|^2 over B(0, eps) is n eps^2 / (n+2)
    for n in (2, 3):
        rule = BallRule.product(n, 0.5, 41)
        got = step_random_walk(sq, np.zeros(n), 0.5, rule)
        assert math.isclose(got, n * 0.25 / (n + 2), rel_tol=0.02)


def test_step_random_walk_affine_exact():
    rule = BallRule.product(2, 0.5, 21)
    got = step_random_walk(lambda p: p @ [2.0, -1.0] + 3.0, (0.2, 0.1), 0.5, rule)
    assert math.isclose(got, 0.2 * 2 - 0.1 + 3.0, rel_tol=1e-12)


def test_step_space_dependent_interpolates():
    probe = BallRule.product(2, 0.4, 41).offsets
    rule = BallRule.product(2, 0.4, 41)
    tug = step_tug_of_war(sq, (0.0, 0.0), 0.4, probe)
    mean = step_random_walk(sq, (0.0, 0.0), 0.4, rule)
    for a in (0.0, 0.3, 1.0):
        got = step_space_dependent(sq, (0.0, 0.0), 0.4, a, probe, rule)
        assert math.isclose(got, a * tug + (1 - a) * mean, rel_tol=1e-13)


def test_step_directional_frozen_quadratic():
    # u = |y|^2 at the origin, eps = 1, alpha = beta = 1/2, n = 2.
    # Every direction gives move value alpha r^2 + beta/3 (segment second
    # moment 1/3, Gauss-Legendre exact); radii {1, 1/2, 1/4, 1/16} give
    # sup 2/3 and inf 1/512 + 1/6, so the step is 1283/3072.
    spec = GameSpec.directional(1.0, 0.5)
    got = step_directional(sq, (0.0, 0.0), spec)
    assert math.isclose(got, 1283.0 / 3072.0, rel_tol=1e-12)


def test_step_directional_alpha_one_drops_disk():
    # alpha = 1: value reduces to 0.5*(sup + inf) of u over the jump set
    spec = GameSpec.directional(0.5, 1.0)
    got = step_directional(sq, (0.0, 0.0), spec)
    r = move_radii(spec)
    assert math.isclose(got, 0.5 * (r[0] ** 2 + r[-1] ** 2), rel_tol=1e-12)


def test_step_directional_affine_fixed():
    # antipodal directions cancel the linear part
    spec = GameSpec.directional(0.3, 0.7)
    u = lambda p: p @ [1.5, -2.0] + 0.25
    got = step_directional(u, (0.1, 0.2), spec)
    assert math.isclose(got, 0.1 * 1.5 - 0.2 * 2.0 + 0.25, rel_tol=1e-12)


# -- grid application --------------------------------------------------------


def _domain(h=0.05, eps=0.2):
    return build_grid_domain(Ball(center=(0.0, 0.0), radius=1.0), h, eps)


def _specs(eps=0.2):
    return [
        GameSpec.tug_of_war(eps),
        GameSpec.random_walk(eps),
        GameSpec.space_dependent(eps, lambda p: 0.5 + 0.4 * np.tanh(p[:, 0])),
        GameSpec.directional(eps, 0.5, direction_count=16),
    ]


def test_apply_operator_fixes_constants():
    dom = _domain()
    fld = constant_field(dom, 2.5)
    for spec in _specs():
        out = apply_operator(fld, spec)
        assert np.allclose(out.values, 2.5, atol=1e-12)


def test_apply_operator_fixes_affine():
    dom = _domain()
    fld = field_from_function(dom, lambda p: 1.0 + 2.0 * p[:, 0] - p[:, 1])
    for spec in _specs():
        out = apply_operator(fld, spec)
        err = np.abs(out.values - fld.values)[dom.interior_indices]
        assert err.max() < 1e-10, spec.kind


def test_apply_operator_keeps_strip_values():
    dom = _domain()
    fld = field_from_function(dom, lambda p: p[:, 0] ** 2)
    for spec in _specs():
        out = apply_operator(fld, spec)
        assert np.array_equal(
            out.values[dom.strip_indices], fld.values[dom.strip_indices]
        )


def test_apply_operator_monotone():
    dom = _domain()
    rng = np.random.default_rng(17)
    u = rng.uniform(size=dom.n_points)
    v = u + rng.uniform(size=dom.n_points)  # v >= u pointwise
    from dpplab.core import ValueField

    fu, fv = ValueField(dom, u), ValueField(dom, v)
    for spec in _specs():
        au = apply_operator(fu, spec).values[dom.interior_indices]
        av = apply_operator(fv, spec).values[dom.interior_indices]
        assert np.all(av >= au - 1e-12), spec.kind


def test_apply_operator_nonexpansive():
    dom = _domain()
    rng = np.random.default_rng(29)
    from dpplab.core import ValueField

    u = ValueField(dom, rng.uniform(size=dom.n_points))
    v = ValueField(dom, rng.uniform(size=dom.n_points))
    gap = np.abs(u.values - v.values).max()
    for spec in _specs():
        au = apply_operator(u, spec).values[dom.interior_indices]
        av = apply_operator(v, spec).values[dom.interior_indices]
        assert np.abs(au - av).max() <= gap + 1e-12, spec.kind


def test_apply_operator_shift_equivariant():
    dom = _domain()
    rng = np.random.default_rng(31)
    from dpplab.core import ValueField

    u = ValueField(dom, rng.uniform(size=dom.n_points))
    shifted = ValueField(dom, u.values + 4.0)
    for spec in _specs():
        au = apply_operator(u, spec).values[dom.interior_indices]
        ash = apply_operator(shifted, spec).values[dom.interior_indices]
        assert np.allclose(ash, au + 4.0, atol=1e-11), spec.kind


def test_space_dependent_endpoints_match_pure_games():
    dom = _domain()
    fld = field_from_function(dom, lambda p: np.sin(3 * p[:, 0]) + p[:, 1] ** 2)
    tug = apply_operator(fld, GameSpec.tug_of_war(0.2)).values
    mean = apply_operator(fld, GameSpec.random_walk(0.2)).values
    all_tug = apply_operator(fld, GameSpec.space_dependent(0.2, 1.0)).values
    all_mean = apply_operator(fld, GameSpec.space_dependent(0.2, 0.0)).values
    assert np.allclose(all_tug, tug, atol=1e-13)
    assert np.allclose(all_mean, mean, atol=1e-13)


def test_directional_alpha_validation():
    with pytest.raises(ValueError):
        GameSpec.directional(0.1, 0.0)  # alpha must be positive
    with pytest.raises(ValueError):
        GameSpec.directional(0.1, 1.2)


def test_alpha_at_validates_range():
    spec = GameSpec.space_dependent(0.1, lambda p: 1.5 * np.ones(len(p)))
    with pytest.raises(ValueError):
        spec.alpha_at(np.zeros((3, 2)))
