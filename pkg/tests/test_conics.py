import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dancing.conics import (NON_PULLBACK_EXAMPLE, NON_PULLBACK_M_RESIDUAL, dancing_conics_oracle,
                            dancing_conics_residual, dancing_sample, generic_sample,
                            infinitesimal_quadric, kernel_angles, m_condition_residual,
                            m_condition_via_flat, pencil_conic, polar_projection, quadric_kernel,
                            quadric_value, random_pair, signature, tangent_parts)
from dancing.errors import IncidentPair
from dancing.projective import random_sl3, sl3_transform
from dancing.suites import conic_expansion

seeds = st.integers(0, 2**32 - 1)
kinds = st.sampled_from(["generic", "nested", "concentric"])

A0 = np.diag([-1.0, -1.0, 1.0])
a0 = np.array([0.0, 0.0, 1.0])
DANCING = NON_PULLBACK_EXAMPLE
NOT_DANCING = (a0, np.diag([1.0, 1.0, -1.0]), np.array([1.0, 1.0, 1.0]), np.diag([2.0, 1.0, -1.0]))


def _v(**kw):
    names = ["xd", "yd", "A11", "A12", "A22", "A13", "A23"]
    return np.array([kw.get(n, 0.0) for n in names])


def test_residual_examples():
    assert dancing_conics_residual(*DANCING) == pytest.approx(0.0, abs=1e-14)
    assert dancing_conics_residual(*NOT_DANCING) == -1.0


def test_residual_swap_symmetric():
    # swapping the pairs exchanges the two products, so the value is unchanged
    for quad in (NOT_DANCING, DANCING):
        a, A, b, B = quad
        assert dancing_conics_residual(b, B, a, A) == dancing_conics_residual(a, A, b, B)


def test_residual_incident():
    with pytest.raises(IncidentPair):
        dancing_conics_residual([1, 0, 1], np.diag([1.0, 1.0, -1.0]), *NOT_DANCING[2:])


def test_oracle_examples():
    assert abs(dancing_conics_oracle(*DANCING)) < 1e-8
    assert abs(dancing_conics_oracle(*NOT_DANCING)) > 1e-2


def test_oracle_concentric_complex_points():
    A = np.diag([1.0, 1.0, -1.0])
    B = np.diag([1.0, 1.0, -4.0])
    a = np.array([0.5, 0.0, 1.0])
    C = pencil_conic(a, A, B)
    # a second point of C = {x^2 + y^2 = 1/4}
    b = np.array([0.0, 0.5, 1.0])
    assert abs(b @ C @ b) < 1e-15
    assert abs(dancing_conics_residual(a, A, b, B)) < 1e-15
    assert abs(dancing_conics_oracle(a, A, b, B)) < 1e-10
    b_off = np.array([0.0, 0.7, 1.0])
    assert abs(dancing_conics_oracle(a, A, b_off, B)) > 1e-3


@given(seeds, kinds)
def test_dancing_samples_pass_both_tests(seed, kind):
    a, A, b, B = dancing_sample(np.random.default_rng(seed), kind)
    assert abs(dancing_conics_residual(a, A, b, B, relative=True)) < 1e-10
    assert abs(dancing_conics_oracle(a, A, b, B)) < 1e-8


@given(seeds)
def test_generic_samples_fail_both_tests(seed):
    g = generic_sample(np.random.default_rng(seed))
    assert abs(dancing_conics_residual(*g, relative=True)) >= 1e-3
    assert abs(dancing_conics_oracle(*g)) > 1e-8


@given(seeds, kinds)
def test_sl3_invariance(seed, kind):
    rng = np.random.default_rng(seed)
    a, A, b, B = dancing_sample(rng, kind)
    M = random_sl3(rng)
    moved = (sl3_transform(M, a), sl3_transform(M, A, "conic"),
             sl3_transform(M, b), sl3_transform(M, B, "conic"))
    assert abs(dancing_conics_residual(*moved, relative=True)) < 1e-9


def test_quadric_at_canonical_pair():
    G = infinitesimal_quadric(a0, A0)
    assert quadric_value(a0, A0, _v(A11=1.0)) == 0.0
    assert _v(A11=1.0) @ G @ _v(A11=1.0) == 0.0
    v = _v(xd=1.0, A13=3.0)
    assert v @ G @ v == pytest.approx(3.0, abs=1e-14)
    w = _v(yd=2.0, A23=-1.5, A12=4.0)
    assert w @ G @ w == pytest.approx(-3.0, abs=1e-14)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(G)), [-0.5, -0.5, 0, 0, 0, 0.5, 0.5],
                               atol=1e-14)


def test_signature_examples():
    assert signature(np.diag([1.0, -1.0, 0.0])) == (1, 1, 1)
    assert signature(infinitesimal_quadric(a0, A0)) == (2, 2, 3)


@given(seeds)
def test_quadric_matches_direct_value(seed):
    rng = np.random.default_rng(seed)
    a, A = random_pair(rng)
    v = rng.standard_normal(7)
    G = infinitesimal_quadric(a, A)
    assert v @ G @ v == pytest.approx(quadric_value(a, A, v), rel=1e-10, abs=1e-12)


@given(seeds)
def test_signature_and_kernel_random_pairs(seed):
    a, A = random_pair(np.random.default_rng(seed))
    assert signature(infinitesimal_quadric(a, A)) == (2, 2, 3)
    assert np.max(kernel_angles(a, A)) < 1e-7


def test_polar_projection_canonical():
    pp = polar_projection(a0, A0)
    np.testing.assert_array_equal(pp.line, [0.0, 0.0, 1.0])
    assert pp.kernel.shape == (7, 3)
    # kernel spanned by the A11, A12, A22 directions
    assert np.abs(pp.kernel[[0, 1, 5, 6]]).max() < 1e-14
    assert quadric_kernel(a0, A0).shape == (7, 3)


def test_fibre_over_centre_and_line_at_infinity():
    # every ellipse centred at the origin has polar line at infinity for the centre
    rng = np.random.default_rng(3)
    for _ in range(10):
        p, q, th = rng.uniform(0.3, 2), rng.uniform(0.3, 2), rng.uniform(0, math.pi)
        R = np.array([[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 1]])
        A = R @ np.diag([1 / p**2, 1 / q**2, -1.0]) @ R.T
        A = 0.5 * (A + A.T)
        line = polar_projection(a0, A).line
        assert np.abs(line[:2]).max() < 1e-14 * abs(line[2])


@given(seeds)
def test_projection_lands_off_incidence(seed):
    a, A = random_pair(np.random.default_rng(seed))
    pp = polar_projection(a, A)
    assert abs(pp.point @ pp.line) > 0


def test_m_condition_examples():
    assert m_condition_residual(*DANCING) == pytest.approx(NON_PULLBACK_M_RESIDUAL, abs=1e-12)
    assert NON_PULLBACK_M_RESIDUAL == pytest.approx(1.985, abs=1e-3)
    a, A, b, B = DANCING
    assert m_condition_residual(a, A, a, B) == 0.0
    assert dancing_conics_residual(a, A, b, A) == 0.0
    # equal conics dance in N but their polar images need not: (aAa)(bAb) - (aAb)^2
    expected = (a @ A @ a) * (b @ A @ b) - (a @ A @ b) ** 2
    assert m_condition_residual(a, A, b, A) == pytest.approx(expected, rel=1e-14)
    assert abs(expected) > 1.0


@given(seeds)
def test_m_condition_equals_flat_residual(seed):
    rng = np.random.default_rng(seed)
    a, A = random_pair(rng)
    b, B = random_pair(rng)
    m1 = m_condition_residual(a, A, b, B)
    m2 = m_condition_via_flat(a, A, b, B)
    assert m1 == pytest.approx(m2, rel=1e-12, abs=1e-12)


def test_expansion_factor_and_slope():
    slope, factor = conic_expansion()
    assert factor == 2.0
    assert slope > 2.9


def test_tangent_parts_roundtrip():
    ad, Ad = tangent_parts(np.arange(1.0, 8.0))
    np.testing.assert_array_equal(ad, [1.0, 2.0, 0.0])
    np.testing.assert_array_equal(Ad, Ad.T)
    assert Ad[2, 2] == 0.0 and Ad[0, 2] == 6.0
