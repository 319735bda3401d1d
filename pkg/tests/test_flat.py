import numpy as np
import pytest
from hypothesis import given, strategies as st

from dancing.errors import IncidentOutput, IncidentPair, ProportionalInputs
from dancing.flat import (AlphaSurfaceChart, FlatPairM, alpha_surface_point,
                          alpha_surface_tangents, chart_coords, dancing_flat_oracle,
                          dancing_flat_residual, dancing_partner, embed_affine, is_dancing_flat,
                          metric_flat, metric_flat_matrix, random_alpha_chart, random_pair)
from dancing.projective import random_sl3, sl3_transform
from dancing.suites import expansion_slope

seeds = st.integers(0, 2**32 - 1)


def test_residual_examples():
    P, L = [0, 0, 1], [0, 0, 1]
    assert dancing_flat_residual(P, L, [1, 0, 1], [0, 1, 1]) == 0.0
    assert dancing_flat_residual(P, L, [1, 1, 1], [1, 0, 1]) == 1.0
    assert dancing_flat_residual(P, L, P, L) == 0.0


def test_residual_rejects_incident_pair():
    with pytest.raises(IncidentPair):
        dancing_flat_residual([1, 0, 1], [1, 0, -1], [0, 0, 1], [0, 0, 1])


def test_oracle_examples():
    P, L = [0, 0, 1], [0, 0, 1]
    assert dancing_flat_oracle(P, L, [1, 0, 1], [0, 1, 1]) == 0.0
    assert abs(dancing_flat_oracle(P, L, [1, 1, 1], [1, 0, 1])) > 0.1


def test_oracle_rejects_degenerate():
    with pytest.raises(ProportionalInputs):
        dancing_flat_oracle([0, 0, 1], [0, 0, 1], [0, 0, 2], [1, 0, 1])


def test_embed_affine_example():
    P, L = embed_affine(FlatPairM(1.0, 2.0, 3.0, 4.0))
    np.testing.assert_array_equal(P, [1.0, 2.0, 1.0])
    np.testing.assert_array_equal(L, [3.0, 4.0, -10.0])
    assert P @ L == 1.0


def test_chart_roundtrip():
    m = FlatPairM(0.3, -1.2, 2.0, 0.5)
    back = chart_coords(*(5.0 * v for v in embed_affine(m)))
    np.testing.assert_allclose(back.as_array(), m.as_array(), atol=1e-14)


def test_metric_examples():
    assert metric_flat(FlatPairM(0, 0, 0, 0), [1, 0, 1, 0]) == 1.0
    assert metric_flat(FlatPairM(0, 0, 1, 0), [1, 0, 0, 0]) == 1.0
    assert metric_flat(FlatPairM(0, 0, 0, 0), [1, 0, 0, 0]) == 0.0


def test_metric_signature_is_neutral():
    ev = np.linalg.eigvalsh(metric_flat_matrix([0.2, 0.4, -1.0, 0.7]))
    assert (ev > 0).sum() == 2 and (ev < 0).sum() == 2


def test_expansion_is_second_order():
    assert expansion_slope() > 2.9


def test_alpha_surface_example():
    chart = AlphaSurfaceChart([0, 1, 0], [-1, 0, 0])
    P, L = chart.point(2.0, 3.0)
    np.testing.assert_array_equal(P / P[2], [2.0, 0.0, 1.0])
    np.testing.assert_array_equal(L / L[1], [0.0, 1.0, 3.0])


def test_alpha_surface_incident_output():
    chart = AlphaSurfaceChart([0, 1, 0], [-1, 0, 0])
    with pytest.raises(IncidentOutput):
        alpha_surface_point(chart, 0.0, 0.0)


def test_alpha_chart_needs_incident_base():
    with pytest.raises(ValueError):
        AlphaSurfaceChart([0, 0, 1], [0, 0, 1])


@given(seeds)
def test_partner_dances_and_oracle_agrees(seed):
    rng = np.random.default_rng(seed)
    P, L = random_pair(rng)
    Pt, Lt = dancing_partner(rng, P, L)
    assert abs(dancing_flat_residual(P, L, Pt, Lt, relative=True)) < 1e-12
    assert abs(dancing_flat_oracle(P, L, Pt, Lt)) < 1e-12


@given(seeds)
def test_residual_and_oracle_vanish_together(seed):
    rng = np.random.default_rng(seed)
    P, L = random_pair(rng)
    Pt, Lt = random_pair(rng)
    r = dancing_flat_residual(P, L, Pt, Lt, relative=True)
    o = dancing_flat_oracle(P, L, Pt, Lt)
    assert (abs(r) < 1e-10) == (abs(o) < 1e-10)


@given(seeds, st.floats(0.2, 5.0), st.floats(-5.0, -0.2))
def test_residual_sl3_and_rescaling(seed, lam, mu):
    rng = np.random.default_rng(seed)
    P, L = random_pair(rng)
    Pt, Lt = dancing_partner(rng, P, L)
    M = random_sl3(rng)
    moved = [sl3_transform(M, P), sl3_transform(M, L, "line"),
             sl3_transform(M, Pt), sl3_transform(M, Lt, "line")]
    assert abs(dancing_flat_residual(*moved, relative=True)) < 1e-11
    assert is_dancing_flat(lam * P, mu * L, Pt, lam * Lt)


@given(seeds)
def test_alpha_surface_totally_null(seed):
    rng = np.random.default_rng(seed)
    chart = random_alpha_chart(rng)
    s1, t1, s2, t2 = rng.uniform(-2, 2, 4)
    try:
        m, vs, vt = alpha_surface_tangents(chart, s1, t1)
        a = alpha_surface_point(chart, s1, t1)
        b = alpha_surface_point(chart, s2, t2)
    except IncidentOutput:
        return
    G = metric_flat_matrix(m)
    norm = np.linalg.norm(vs) * np.linalg.norm(vt) * (1 + np.abs(G).max())
    for u, w in ((vs, vs), (vs, vt), (vt, vt)):
        assert abs(u @ G @ w) <= 1e-9 * norm
    assert abs(dancing_flat_residual(*a, *b, relative=True)) < 1e-12


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_beta_directions_null(x0, x1, z0, z1):
    # zeta fixed and dx orthogonal to zeta
    m = FlatPairM(x0, x1, z0, z1)
    v = np.array([-z1, z0, 0.0, 0.0])
    assert abs(metric_flat(m, v)) < 1e-12
