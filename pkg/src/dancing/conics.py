"""Dancing of non-incident (point, conic) pairs.

Pairs ``(a, A)`` and ``(b, B)`` dance when some conic passes through ``a``,
``b`` and the four points of ``A`` meeting ``B``.  Such a conic lies in the
pencil ``A + t B``, which gives the algebraic test
``(a.A.a)(b.B.b) - (a.B.a)(b.A.b)``.

Tangent vectors on the 7-manifold of pairs use the chart ``a = (x, y, 1)``,
``A[2, 2] = 1`` with coordinates
``(xdot, ydot, A11dot, A12dot, A22dot, A13dot, A23dot)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space, subspace_angles

from .errors import IncidentPair
from .flat import dancing_flat_residual
from .projective import (
    TOL,
    conic,
    conic_intersect,
    design_row,
    hom,
    normalize,
    scale,
    six_point_conic_det,
)

# positions of the five free conic entries in the chart
CONIC_SLOTS = ((0, 0), (0, 1), (1, 1), (0, 2), (1, 2))
TANGENT_DIM = 7


def _q(a, A, b=None):
    b = a if b is None else b
    return a @ A @ b


def _check_pair(a, A, tol=TOL):
    if abs(_q(a, A)) <= tol * scale(a) ** 2 * scale(A):
        raise IncidentPair("point lies on the conic")


def dancing_conics_residual(a, A, b, B, relative: bool = False, check: bool = True) -> float:
    """``(a.A.a)(b.B.b) - (a.B.a)(b.A.b)``; zero iff the pairs dance.

    With ``relative=True`` the value is divided by
    ``|a|^2 |b|^2 |A| |B|`` in max-abs norms.
    """
    a, b = hom(a), hom(b)
    A, B = conic(A), conic(B)
    if check:
        _check_pair(a, A)
        _check_pair(b, B)
    r = float(_q(a, A) * _q(b, B) - _q(a, B) * _q(b, A))
    if relative:
        r /= scale(a) ** 2 * scale(b) ** 2 * scale(A) * scale(B)
    return r


def pencil_parameter(a, A, B) -> float:
    """``t`` with ``a`` on ``A + t B``."""
    aBa = _q(a, B)
    if abs(aBa) <= TOL * scale(a) ** 2 * scale(B):
        raise ValueError("a lies on B; the pencil conic through a is B itself")
    return -_q(a, A) / aBa


def dancing_conics_oracle(a, A, b, B) -> complex:
    """Six-point determinant of ``a``, ``b`` and the four points of ``A ^ B``.

    Intersection points are computed independently of the residual and may be
    complex; the determinant is then complex too.  A base point of
    multiplicity ``k`` contributes ``k`` rows: the Taylor coefficients of the
    conic monomials along ``A`` at that point (passing through it, being
    tangent there, ...), so tangent pencils are tested correctly.
    """
    a, b = hom(a), hom(b)
    A, B = conic(A), conic(B)
    _check_pair(a, A)
    _check_pair(b, B)
    inter = conic_intersect(A, B)
    if all(m == 1 for m in inter.multiplicities):
        return complex(six_point_conic_det(a, b, *inter.points))
    rows = [design_row(normalize(a)), design_row(normalize(b))]
    for p, k in inter.distinct():
        if k == 2:
            p = refine_tangency(p, A, B)
        rows.extend(_jet_rows(A, p, k))
    return complex(np.linalg.det(np.array(rows)))


def refine_tangency(p, A, B, steps: int = 6):
    """Polish a double base point as a simple root of ``p.A.p = 0``, ``(A p) x (B p) = 0``.

    Root finding only resolves a double point to about ``sqrt(eps)``; the
    tangency system is regular there, so Gauss-Newton recovers full accuracy.
    """
    p = normalize(np.asarray(p, dtype=complex))
    k = int(np.argmax(np.abs(p)))
    free = [i for i in range(3) if i != k]
    for _ in range(steps):
        Ap, Bp = A @ p, B @ p
        F = np.concatenate([[p @ Ap], np.cross(Ap, Bp)])
        J = np.empty((4, 2), dtype=complex)
        for c, i in enumerate(free):
            e = np.zeros(3)
            e[i] = 1.0
            J[0, c] = 2 * Ap[i]
            J[1:, c] = np.cross(A @ e, Bp) + np.cross(Ap, B @ e)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        p = p.copy()
        p[free] += step
        if np.abs(step).max() <= 1e-16:
            break
    return p


def _jet_rows(A, p, k):
    """Rows for the length-``k`` piece of ``A`` at its point ``p``.

    ``A`` is parametrised near ``p`` by projecting from ``p``:
    ``x(s) = (q.A.q) p - 2 (p.A.q) q`` with ``q = d + s e``, ``d`` on the
    tangent line at ``p`` and ``e`` off it.
    """
    p = normalize(np.asarray(p, dtype=complex))
    A = np.asarray(A, dtype=float)
    tangent = A @ p
    d = max((np.cross(tangent, np.eye(3)[i]) for i in range(3)),
            key=lambda c: np.abs(np.cross(c, p)).max())
    e = np.eye(3)[int(np.argmax(np.abs(tangent)))].astype(complex)
    dAd, dAe, eAe, pAe = d @ A @ d, d @ A @ e, e @ A @ e, p @ A @ e
    # x(s) as quadratic polynomials (lowest order first) per component
    x = [np.array([dAd * p[i], 2 * dAe * p[i] - 2 * pAe * d[i], eAe * p[i] - 2 * pAe * e[i]])
         for i in range(3)]
    mono = [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)]
    prods = [np.convolve(x[i], x[j]) for i, j in mono]
    rows = []
    for order in range(k):
        row = np.array([c[order] for c in prods])
        rows.append(row / np.abs(row).max())
    return rows


def pencil_conic(a, A, B) -> np.ndarray:
    """The member ``A + t B`` of the pencil passing through ``a``."""
    return conic(A) + pencil_parameter(a, A, B) * conic(B)


# --------------------------------------------------------------------------
# infinitesimal structure


def tangent_parts(v) -> tuple[np.ndarray, np.ndarray]:
    """Split a 7-vector into ``(adot, Adot)`` as a homogeneous vector and a 3x3 form."""
    v = np.asarray(v, dtype=float)
    ad = np.array([v[0], v[1], 0.0])
    Ad = np.zeros((3, 3))
    for k, (i, j) in enumerate(CONIC_SLOTS):
        Ad[i, j] = Ad[j, i] = v[2 + k]
    return ad, Ad


def chart_pair(a, A) -> tuple[np.ndarray, np.ndarray]:
    """Rescale to the chart: ``a[2] = 1`` and ``A[2, 2] = 1``."""
    a = hom(a)
    A = conic(A)
    if a[2] == 0 or A[2, 2] == 0:
        raise ValueError("pair lies outside the affine chart")
    return a / a[2], A / A[2, 2]


def _mixed_block(a, A) -> np.ndarray:
    """``M`` with ``Q(v) = adot^T M Adot`` in chart coordinates (2x5)."""
    aAa = _q(a, A)
    M = np.zeros((2, 5))
    for i in range(2):
        e = np.zeros(3)
        e[i] = 1.0
        for k in range(5):
            v = np.zeros(TANGENT_DIM)
            v[2 + k] = 1.0
            _, Ad = tangent_parts(v)
            M[i, k] = aAa * (a @ Ad @ e) - (a @ Ad @ a) * (a @ A @ e)
    return M


def infinitesimal_quadric(a, A) -> np.ndarray:
    """Symmetric 7x7 matrix ``G`` of ``(a.A.a)(a.Adot.adot) - (a.Adot.a)(a.A.adot)``.

    The quadratic form is bilinear in ``adot`` and ``Adot``, so ``G`` has only
    the off-diagonal blocks, each half of the mixed coefficients.
    """
    a, A = chart_pair(a, A)
    _check_pair(a, A)
    M = _mixed_block(a, A)
    G = np.zeros((TANGENT_DIM, TANGENT_DIM))
    G[:2, 2:] = 0.5 * M
    G[2:, :2] = 0.5 * M.T
    return G


def quadric_value(a, A, v) -> float:
    """``(a.A.a)(a.Adot.adot) - (a.Adot.a)(a.A.adot)`` evaluated directly."""
    a, A = chart_pair(a, A)
    ad, Ad = tangent_parts(v)
    return float(_q(a, A) * (a @ Ad @ ad) - (a @ Ad @ a) * (a @ A @ ad))


def signature(M, tol: float = 1e-9) -> tuple[int, int, int]:
    """``(n_pos, n_neg, n_zero)``; eigenvalues below ``tol * |M|_2`` count as zero."""
    M = np.asarray(M, dtype=float)
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(np.abs(M).max(), 1.0)):
        raise ValueError("signature needs a symmetric matrix")
    w = np.linalg.eigvalsh(M)
    cut = tol * max(np.abs(w).max(), 0.0)
    return int((w > cut).sum()), int((w < -cut).sum()), int((np.abs(w) <= cut).sum())


def perturb(a, A, v, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """``(a + eps adot, A + eps Adot)`` in the chart."""
    a, A = chart_pair(a, A)
    ad, Ad = tangent_parts(v)
    return a + eps * ad, A + eps * Ad


# --------------------------------------------------------------------------
# polar projection to point-line pairs


@dataclass(frozen=True)
class PolarProjection:
    point: np.ndarray
    line: np.ndarray
    kernel: np.ndarray  # (7, 3) orthonormal basis of ker d(pi)


def polar_differential(a, A) -> np.ndarray:
    """Matrix of ``v -> (xdot, ydot, (Adot a + A adot) x (A a))``.

    The last block measures the change of the polar line up to scale, so the
    null space is the kernel of ``d pi`` with lines taken projectively.
    """
    a, A = chart_pair(a, A)
    alpha = A @ a
    D = np.zeros((5, TANGENT_DIM))
    for k in range(TANGENT_DIM):
        v = np.zeros(TANGENT_DIM)
        v[k] = 1.0
        ad, Ad = tangent_parts(v)
        D[0, k], D[1, k] = ad[0], ad[1]
        dalpha = Ad @ a + A @ ad
        D[2:, k] = np.cross(dalpha, alpha)
    return D


def polar_projection(a, A) -> PolarProjection:
    """``pi(a, A) = (a, A a)`` with an orthonormal basis of the kernel of ``d pi``."""
    a, A = chart_pair(a, A)
    K = null_space(polar_differential(a, A), rcond=1e-10)
    return PolarProjection(a, A @ a, K)


def quadric_kernel(a, A) -> np.ndarray:
    G = infinitesimal_quadric(a, A)
    return null_space(G, rcond=1e-9)


def kernel_angles(a, A) -> np.ndarray:
    """Principal angles between ``ker G`` and ``ker d pi``."""
    Kg = quadric_kernel(a, A)
    Kp = polar_projection(a, A).kernel
    if Kg.shape[1] != Kp.shape[1]:
        return np.array([np.pi / 2])
    return subspace_angles(Kg, Kp)


def m_condition_residual(a, A, b, B) -> float:
    """``(a.A.a)(b.B.b) - (a.B.b)(b.A.a)``: dancing of the polar images."""
    a, b = hom(a), hom(b)
    A, B = conic(A), conic(B)
    return float(_q(a, A) * _q(b, B) - _q(a, B, b) * _q(b, A, a))


def m_condition_via_flat(a, A, b, B) -> float:
    """The same quantity through the point-line residual of ``(a, A a)`` and ``(b, B b)``."""
    a, b = hom(a), hom(b)
    return dancing_flat_residual(a, conic(A) @ a, b, conic(B) @ b, check=False)


# the stored quadruple: dancing as point-conic pairs, not as polar images
NON_PULLBACK_EXAMPLE = (
    np.array([2.0, 0.0, 1.0]),
    np.diag([1.0, 1.0, -1.0]),
    np.array([np.sqrt(2.0), np.sqrt(2.0) / 2, 1.0]),
    np.diag([2.0, 1.0, -1.0]),
)
NON_PULLBACK_M_RESIDUAL = 6 * np.sqrt(2.0) - 6.5


# --------------------------------------------------------------------------
# samplers


def random_conic(rng: np.random.Generator, min_det: float = 0.05) -> np.ndarray:
    """Random nonsingular conic in the chart ``A[2, 2] = 1``."""
    while True:
        S = rng.standard_normal((3, 3))
        A = 0.5 * (S + S.T)
        if abs(A[2, 2]) < 0.2:
            continue
        A = A / A[2, 2]
        if abs(np.linalg.det(A)) >= min_det * np.abs(A).max() ** 3:
            return A


def random_pair(rng: np.random.Generator, min_incidence: float = 0.05):
    """Random non-incident chart pair ``(a, A)``."""
    while True:
        A = random_conic(rng)
        a = np.array([*rng.uniform(-2, 2, 2), 1.0])
        if abs(_q(a, A)) >= min_incidence * scale(a) ** 2 * scale(A):
            return a, A


def concentric_circles(rng: np.random.Generator):
    """Two concentric circles: tangent at the two circular points at infinity."""
    r1, r2 = rng.uniform(0.5, 1.0), rng.uniform(1.5, 2.5)
    cx, cy = rng.uniform(-1, 1, 2)
    T = np.array([[1.0, 0, -cx], [0, 1.0, -cy], [0, 0, 1.0]])

    def circle(r):
        return T.T @ np.diag([1.0, 1.0, -r * r]) @ T

    A, B = circle(r1), circle(r2)
    return A / A[2, 2], B / B[2, 2]


def nested_ellipses(rng: np.random.Generator):
    """An ellipse strictly inside another: four simple, non-real common points."""
    while True:
        p, q = rng.uniform(0.3, 1.0, 2)
        th = rng.uniform(0, np.pi)
        c, s = np.cos(th), np.sin(th)
        R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
        A = R @ np.diag([1 / p**2, 1 / q**2, -1.0]) @ R.T
        cx, cy = rng.uniform(-0.5, 0.5, 2)
        r = 1.0 + np.hypot(cx, cy) + rng.uniform(0.2, 1.0)
        T = np.array([[1.0, 0, -cx], [0, 1.0, -cy], [0, 0, 1.0]])
        B = T.T @ np.diag([1.0, 1.0 / rng.uniform(1.0, 1.5) ** 2, -r * r]) @ T
        A, B = 0.5 * (A + A.T), 0.5 * (B + B.T)
        inter = conic_intersect(A, B)
        if inter.is_real or any(m > 1 for m in inter.multiplicities):
            continue
        return A / A[2, 2], B / B[2, 2]


def _base_points_simple(A, B, sep: float = 0.05) -> bool:
    pts = conic_intersect(A, B).points
    for i in range(4):
        for j in range(i + 1, 4):
            if np.abs(np.cross(pts[i], pts[j])).max() < sep:
                return False
    return True


def dancing_sample(rng: np.random.Generator, kind: str = "generic", min_incidence: float = 0.05):
    """A dancing quadruple ``(a, A, b, B)`` built through the pencil.

    ``b`` is the second point where a random line through ``a`` meets the
    pencil conic ``C`` through ``a``.  ``kind`` selects the conics: random
    (``"generic"``), ``"nested"`` ellipses or ``"concentric"`` circles; the
    last two have no real common point.
    """
    pick = {"nested": nested_ellipses, "concentric": concentric_circles}
    if kind not in pick and kind != "generic":
        raise ValueError(f"unknown sample kind {kind!r}")
    while True:
        if kind in pick:
            A, B = pick[kind](rng)
        else:
            A, B = random_conic(rng), random_conic(rng)
            if not _base_points_simple(A, B):
                continue
        a = np.array([*rng.uniform(-2, 2, 2), 1.0])
        if abs(_q(a, A)) < min_incidence * scale(a) ** 2 * scale(A):
            continue
        if abs(_q(a, B)) < min_incidence * scale(a) ** 2 * scale(B):
            continue
        C = A + pencil_parameter(a, A, B) * B
        d = np.array([*rng.standard_normal(2), 0.0])
        dCd = d @ C @ d
        if abs(dCd) < 1e-3:
            continue
        s = -2 * (a @ C @ d) / dCd
        if abs(s) < 0.05:
            continue
        b = a + s * d
        if abs(b[0]) > 50 or abs(b[1]) > 50:
            continue
        if abs(_q(b, B)) < min_incidence * scale(b) ** 2 * scale(B):
            continue
        return a, A, b, B


def generic_sample(rng: np.random.Generator, min_residual: float = 1e-3):
    """A quadruple that is clearly not dancing."""
    while True:
        a, A = random_pair(rng)
        b, B = random_pair(rng)
        if not _base_points_simple(A, B):
            continue
        if abs(dancing_conics_residual(a, A, b, B, relative=True)) >= min_residual:
            return a, A, b, B
