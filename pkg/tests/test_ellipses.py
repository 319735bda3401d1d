import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from dancing.ellipses import (EllipseState, EllipseZ, count_real_directions, dual_ode_residual,
                              ellipse_fit, first_quadratic_roots, fit_residuals,
                              horocycle_b, horocycle_derivatives, incidence_phi,
                              is_null_sigma, metrisability_geodesic, move_to_section,
                              null_oracle_sigma, null_tangent_on_section, path_ode_integrate,
                              quadratic_in_zdot, quadratic_resultant, quartic_in_udot,
                              reduced_quadratics, section_element, sextic_general, sextic_scale,
                              sextic_sigma, write_trajectory_csv, zdot_binary_form)
from dancing.errors import IncidentPoint, NoBranch, NoRealEllipse, OriginPoint, StepBlowUp
from dancing.suites import constructed_null, random_sl2, random_state, section_b

seeds = st.integers(0, 2**32 - 1)
P0 = (2 + math.sqrt(10)) / 3
NULL_V = (1.0, 1.0, (4 - P0 ** 2) / (4 * P0), 1.0)


def _sylvester(f, g):
    # independent oracle: determinant of the 4x4 Sylvester matrix
    a0, a1, a2 = f
    b0, b1, b2 = g
    S = np.array([[a2, a1, a0, 0], [0, a2, a1, a0], [b2, b1, b0, 0], [0, b2, b1, b0]])
    return np.linalg.det(S)


# -- coordinates -------------------------------------------------------------

def test_efg_roundtrip():
    z = EllipseZ(0.7, 1.3)
    E, F, G = z.efg
    assert E * G - F * F == pytest.approx(1.0, rel=1e-12)
    back = EllipseZ.from_efg(E, F, G)
    assert back.a == pytest.approx(0.7, rel=1e-14) and back.b == pytest.approx(1.3, rel=1e-14)


def test_b_must_be_positive():
    with pytest.raises(ValueError):
        EllipseZ(0.0, 0.0)


def test_incidence_examples():
    assert incidence_phi(1, 0, 0, 1) == 0
    assert incidence_phi(1, 0, 0, 2) == 2


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 3))
def test_incidence_even(x, y, a, b):
    assert incidence_phi(-x, -y, a, b) == incidence_phi(x, y, a, b)


def test_component_flag():
    assert EllipseState(0.5, 0.0, 0.0, 1.0).component == "inside"
    assert EllipseState(2.0, 0.0, 0.0, 1.0).component == "outside"


# -- section move ------------------------------------------------------------

def test_move_identity_on_section():
    h, b, v = move_to_section(EllipseState(1.0, 0.0, 0.0, 2.0, (1, 2, 3, 4)))
    np.testing.assert_allclose(h, np.eye(2), atol=1e-15)
    assert b == 2.0
    np.testing.assert_allclose(v, [1, 2, 3, 4], atol=1e-14)


def test_move_from_vertical_axis():
    # 2x^2 + y^2/2 = 1 rotated by -pi/2 becomes x^2/2 + 2y^2 = 1, i.e. b = 1/2
    h, b, _ = move_to_section(EllipseState(0.0, 1.0, 0.0, 2.0))
    np.testing.assert_allclose(h, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-15)
    assert b == pytest.approx(0.5, rel=1e-14)


def test_move_origin_rejected():
    with pytest.raises(OriginPoint):
        section_element(0.0, 0.0, 0.0, 1.0)


@given(seeds)
def test_move_lands_on_section_and_is_idempotent(seed):
    st_ = random_state(np.random.default_rng(seed))
    h, b, v = move_to_section(st_)
    assert np.linalg.det(h) == pytest.approx(1.0, abs=1e-12)
    moved = st_.transformed(h)
    assert moved.x == pytest.approx(1.0, abs=1e-12) and abs(moved.y) < 1e-12
    assert abs(moved.a) < 1e-9 * (1 + moved.b)
    h2, _, _ = move_to_section(moved)
    np.testing.assert_allclose(h2, np.eye(2), atol=1e-9)


# -- sextic ------------------------------------------------------------------

def test_sextic_examples():
    assert sextic_sigma(2.0, (1, 0, 5, 0)) == 0.0
    assert sextic_sigma(2.0, (0, 1, 0, 1)) == 1.0
    assert abs(sextic_sigma(2.0, NULL_V)) < 1e-12 * sextic_scale(2.0, NULL_V)


def test_sextic_rejects_incident_section_point():
    with pytest.raises(IncidentPoint):
        sextic_sigma(1.0, (1, 1, 1, 1))


def test_oracle_examples():
    assert null_oracle_sigma(2.0, (0, 1, 0, 1)) == (False, None)
    is_null, root = null_oracle_sigma(2.0, NULL_V)
    assert is_null and root == pytest.approx(P0, rel=1e-12)
    assert null_oracle_sigma(2.0, (0, 0, 0, 0))[0]


def test_resultant_examples():
    assert quadratic_resultant(-2, 0, 1, -4, 0, 1) == 4
    assert quadratic_resultant(1, 2, 3, 2, 4, 6) == 0


@given(seeds)
def test_resultant_identity(seed):
    rng = np.random.default_rng(seed)
    b = section_b(rng)
    v = rng.standard_normal(4)
    f, g = reduced_quadratics(b, v)
    res = quadratic_resultant(*f, *g)
    scale = b * b * sextic_scale(b, v)
    assert abs(res - b * b * sextic_sigma(b, v)) <= 1e-10 * scale
    assert abs(_sylvester(f, g) - res) <= 1e-9 * (scale + abs(res))


@given(seeds)
def test_oracle_agrees_on_random_and_constructed(seed):
    rng = np.random.default_rng(seed)
    b = section_b(rng)
    v = rng.standard_normal(4)
    assert is_null_sigma(b, v) == null_oracle_sigma(b, v)[0]
    nv = constructed_null(rng, b)
    assert is_null_sigma(b, nv)
    assert null_oracle_sigma(b, nv)[0]


@given(seeds, st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_bidegree(seed, lam, mu):
    st_ = random_state(np.random.default_rng(seed))
    x, y, a, b = st_.x, st_.y, st_.a, st_.b
    xd, yd, ad, bd = st_.v
    base = sextic_general(st_)
    scaled = sextic_general(EllipseState(x, y, a, b, (lam * xd, lam * yd, mu * ad, mu * bd)))
    _, bs, vs = move_to_section(st_)
    ref = lam ** 4 * mu ** 2 * sextic_scale(bs, vs)
    assert abs(scaled - lam ** 4 * mu ** 2 * base) <= 1e-9 * ref


@given(seeds)
def test_sl2_invariance(seed):
    rng = np.random.default_rng(seed)
    st_ = random_state(rng)
    h = random_sl2(rng)
    _, bs, vs = move_to_section(st_)
    ref = sextic_scale(bs, vs)
    assert abs(sextic_general(st_.transformed(h)) - sextic_general(st_)) <= 1e-9 * ref


def test_general_equals_section_value_on_section():
    st_ = EllipseState(1.0, 0.0, 0.0, 2.5, (0.3, -1.2, 0.4, 0.9))
    assert sextic_general(st_) == pytest.approx(sextic_sigma(2.5, st_.v), rel=1e-14)


# -- root counts -------------------------------------------------------------

@given(seeds)
def test_forms_match_sextic(seed):
    rng = np.random.default_rng(seed)
    b = section_b(rng)
    xd, yd, ad, bd = rng.standard_normal(4)
    val = sextic_sigma(b, (xd, yd, ad, bd))
    scale = sextic_scale(b, (xd, yd, ad, bd))
    q = np.polyval(quartic_in_udot(b, ad, bd), xd / yd) * yd ** 4
    assert abs(q - val) <= 1e-9 * scale
    zd = np.array([ad, bd])
    assert abs(zd @ quadratic_in_zdot(b, xd, yd) @ zd - val) <= 1e-9 * scale


def test_root_counts_bounded():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        b = section_b(rng)
        xd, yd, ad, bd = rng.standard_normal(4)
        assert count_real_directions(zdot_binary_form(b, xd, yd)) <= 2
        assert count_real_directions(quartic_in_udot(b, ad, bd)) <= 4


def test_two_horocycle_directions_through_constructed_null():
    rng = np.random.default_rng(7)
    for _ in range(100):
        b = section_b(rng)
        nv = constructed_null(rng, b)
        assert count_real_directions(zdot_binary_form(b, nv[0], nv[1])) == 2


def test_four_turning_points_inside_family():
    # point inside its ellipse on the section (b < 1): always four real directions
    rng = np.random.default_rng(8)
    for _ in range(100):
        b = rng.uniform(0.05, 0.95)
        ad, bd = rng.uniform(-10, 10, 2)
        assert count_real_directions(quartic_in_udot(b, ad, bd)) == 4


def test_count_zero_form_rejected():
    with pytest.raises(ValueError):
        count_real_directions([0.0, 0.0, 0.0])


def test_null_tangent_construction():
    b, xd, yd = 2.0, 1.0, 1.0
    P = max(r.real for r in first_quadratic_roots(b, xd, yd))
    assert P == pytest.approx(P0, rel=1e-14)
    assert null_tangent_on_section(b, xd, yd, P) == pytest.approx(NULL_V[2], rel=1e-14)


# -- path ODE ----------------------------------------------------------------

def test_unit_circle_path():
    traj = path_ode_integrate(0.0, 1.0, 0.0, 0.5)
    assert traj[-1, 0] == 0.5
    assert traj[-1, 1] == pytest.approx(math.sqrt(0.75), abs=1e-8)


def test_reverse_retraces():
    fwd = path_ode_integrate(0.1, 0.9, -0.2, 0.6)
    back = path_ode_integrate(*fwd[-1], 0.1)
    np.testing.assert_allclose(back[-1], fwd[0], atol=1e-8)


def test_step_blow_up_near_vertical_tangent():
    with pytest.raises(StepBlowUp):
        path_ode_integrate(0.0, 1.0, 0.0, 1.2, max_slope=50)


@given(seeds)
def test_path_conservation(seed):
    rng = np.random.default_rng(seed)
    x0, y0, p0 = rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.2), rng.uniform(-0.5, 0.5)
    z = ellipse_fit(x0, y0, p0)
    try:
        traj = path_ode_integrate(x0, y0, p0, x0 + 0.3, max_slope=20)
    except StepBlowUp:
        assume(False)
    phi = np.abs([incidence_phi(x, y, z.a, z.b) for x, y, _ in traj])
    assert phi.max() < 1e-6
    for x, y, p in traj[::50]:
        zi = ellipse_fit(x, y, p)
        assert abs(zi.a - z.a) < 1e-6 and abs(zi.b - z.b) < 1e-6


def test_fit_examples():
    for z in (ellipse_fit(1.0, 0.0, direction=(0.0, 1.0)), ellipse_fit(0.0, 1.0, 0.0)):
        assert z.a == pytest.approx(0.0, abs=1e-15) and z.b == pytest.approx(1.0, rel=1e-14)
    z = ellipse_fit(1.0, 1.0, -1.0)
    assert incidence_phi(1.0, 1.0, z.a, z.b) == pytest.approx(0.0, abs=1e-12)
    E, F, G = z.efg
    assert E * G - F * F == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(fit_residuals(1.0, 1.0, -1.0, z), 0.0, atol=1e-12)
    assert (z.a, z.b) == pytest.approx((0.6, 0.8), rel=1e-12)


def test_fit_errors():
    with pytest.raises(NoRealEllipse):
        ellipse_fit(1.0, 1.0, 1.0)
    with pytest.raises(OriginPoint):
        ellipse_fit(0.0, 0.0, 1.0)


def test_trajectory_csv(tmp_path):
    traj = path_ode_integrate(0.0, 1.0, 0.0, 0.01)
    out = tmp_path / "t.csv"
    write_trajectory_csv(traj, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,yprime" and len(lines) == len(traj) + 1
    assert float(lines[-1].split(",")[1]) == traj[-1, 1]


# -- dual ODE ----------------------------------------------------------------

@given(st.floats(0.01, 0.49) | st.floats(-0.49, -0.01))
def test_horocycle_of_unit_point_is_circle(a):
    for branch in ("upper", "lower"):
        b = horocycle_b((1.0, 0.0), a, branch)
        assert a * a + (b - 0.5) ** 2 == pytest.approx(0.25, abs=1e-12)


def test_dual_ode_example():
    b = horocycle_b((1.0, 0.0), 0.3)
    assert b == pytest.approx(0.9, rel=1e-14)
    b1, b2 = horocycle_derivatives((1.0, 0.0), 0.3, b)
    assert b1 == pytest.approx(-0.75, rel=1e-12)
    assert b2 == pytest.approx(-3.90625, rel=1e-12)
    assert abs(dual_ode_residual((1.0, 0.0), 0.3, -1)) < 1e-12
    assert abs(dual_ode_residual((1.0, 0.0), 0.3, +1)) > 1.0


def test_dual_ode_branch_signs():
    rng = np.random.default_rng(5)
    for _ in range(50):
        u = rng.uniform(-2, 2, 2)
        a = rng.uniform(-0.2, 0.2) + u[1] / u[0]
        try:
            up = dual_ode_residual(u, a, -1, "upper")
            lo = dual_ode_residual(u, a, +1, "lower")
        except NoBranch:
            continue
        assert abs(up) < 1e-8 and abs(lo) < 1e-8


def test_lower_branch_small_b_is_accurate():
    # b of order 1e-9: both the root and the right-hand side need stable forms
    u, a = (1.60549971, 0.90380408), 0.5629901396597388
    b = horocycle_b(u, a, "lower")
    assert 0 < b < 1e-8
    assert abs(incidence_phi(*u, a, b)) < 1e-15
    assert abs(dual_ode_residual(u, a, +1, "lower")) < 1e-9


def test_horocycle_out_of_range():
    with pytest.raises(NoBranch):
        horocycle_b((1.0, 0.0), 0.9)
    with pytest.raises(NoBranch):
        horocycle_b((1.0, 0.0), 0.0, "lower")  # touches b = 0


# -- metrisability -------------------------------------------------------------

def test_unit_circle_is_geodesic():
    res = metrisability_geodesic(1.0, 0.0, (0.0, 1.0), 2.0)
    r = np.hypot(res.trajectory[:, 0], res.trajectory[:, 1])
    assert np.abs(r - 1.0).max() < 1e-8
    assert res.max_residual < 1e-6


def test_generic_geodesics_solve_path_ode():
    rng = np.random.default_rng(6)
    for _ in range(10):
        r0 = rng.uniform(0.5, 1.5)
        th0 = rng.uniform(0, 2 * math.pi)
        d = rng.standard_normal(2)
        try:
            res = metrisability_geodesic(r0, th0, d, 0.5)
        except StepBlowUp:
            continue
        assert res.max_residual < 1e-6


def test_rotation_invariance():
    phi = 0.7
    a = metrisability_geodesic(0.8, 0.2, (0.3, 0.9), 0.5)
    b = metrisability_geodesic(0.8, 0.2 + phi, (0.3, 0.9), 0.5)
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    np.testing.assert_allclose(a.trajectory[:, :2] @ R.T, b.trajectory[:, :2], atol=1e-8)
