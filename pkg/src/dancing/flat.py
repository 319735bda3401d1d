"""Dancing of non-incident (point, line) pairs in the projective plane.

Two pairs ``(P, L)`` and ``(P~, L~)`` dance when a single line passes through
``P``, ``P~`` and the meet of ``L`` and ``L~``.  The algebraic test is the
residual ``(P.L)(P~.L~) - (P~.L)(P.L~)``; the geometric test builds the
three points and checks collinearity directly.

The affine chart ``(x0, x1, zeta0, zeta1)`` embeds a pair as
``P = (x0, x1, 1)``, ``L = (zeta0, zeta1, 1 - x.zeta)`` so that ``P.L = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncidentOutput, IncidentPair
from .jets import jet_space
from .projective import TOL, collinear_det, cross_join, hom, scale


@dataclass(frozen=True)
class FlatPairM:
    x0: float
    x1: float
    z0: float
    z1: float

    @classmethod
    def from_array(cls, a) -> "FlatPairM":
        return cls(*map(float, a))

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.x1, self.z0, self.z1])

    def __add__(self, v):
        return FlatPairM.from_array(self.as_array() + np.asarray(v, dtype=float))


def _check_pair(P, L, tol=TOL):
    if abs(P @ L) <= tol * scale(P) * scale(L):
        raise IncidentPair("point lies on the line")


def dancing_flat_residual(P, L, Pt, Lt, relative: bool = False, check: bool = True) -> float:
    """``(P.L)(P~.L~) - (P~.L)(P.L~)``; zero iff the two pairs dance.

    With ``relative=True`` the value is divided by the product of the max-abs
    scales of the four inputs.
    """
    P, L, Pt, Lt = (hom(v) for v in (P, L, Pt, Lt))
    if check:
        _check_pair(P, L)
        _check_pair(Pt, Lt)
    r = float((P @ L) * (Pt @ Lt) - (Pt @ L) * (P @ Lt))
    if relative:
        r /= scale(P) * scale(L) * scale(Pt) * scale(Lt)
    return r


def dancing_flat_oracle(P, L, Pt, Lt) -> float:
    """Collinearity determinant of ``P``, ``P~`` and ``L ^ L~`` (normalised)."""
    P, L, Pt, Lt = (hom(v) for v in (P, L, Pt, Lt))
    _check_pair(P, L)
    _check_pair(Pt, Lt)
    cross_join(P, Pt)  # rejects P ~ P~
    return float(collinear_det(P, Pt, cross_join(L, Lt)))


def is_dancing_flat(P, L, Pt, Lt, tol: float = TOL) -> bool:
    return abs(dancing_flat_residual(P, L, Pt, Lt, relative=True)) <= tol


def embed_affine(m) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(m, FlatPairM):
        m = FlatPairM.from_array(m)
    P = np.array([m.x0, m.x1, 1.0])
    L = np.array([m.z0, m.z1, 1.0 - m.x0 * m.z0 - m.x1 * m.z1])
    return P, L


def chart_coords(P, L) -> FlatPairM:
    """Inverse of :func:`embed_affine` (needs ``P`` off the line at infinity)."""
    P = np.asarray(P, dtype=float)
    L = np.asarray(L, dtype=float)
    P = P / P[2]
    L = L / (P @ L)
    return FlatPairM(P[0], P[1], L[0], L[1])


def metric_flat_matrix(m) -> np.ndarray:
    """Components of ``d zeta_A dx^A + (zeta . dx)^2`` in ``(x0, x1, zeta0, zeta1)``."""
    if not isinstance(m, FlatPairM):
        m = FlatPairM.from_array(m)
    z = np.array([m.z0, m.z1])
    g = np.zeros((4, 4))
    g[:2, :2] = np.outer(z, z)
    g[0, 2] = g[2, 0] = g[1, 3] = g[3, 1] = 0.5
    return g


def metric_flat(m, v, w=None) -> float:
    """The dancing metric evaluated on tangent vectors ``v``, ``w`` at ``m``."""
    v = np.asarray(v, dtype=float)
    w = v if w is None else np.asarray(w, dtype=float)
    return float(v @ metric_flat_matrix(m) @ w)


# --------------------------------------------------------------------------
# alpha- and beta-surfaces


@dataclass(frozen=True)
class AlphaSurfaceChart:
    """Totally null surface of all pairs with ``P`` on ``l`` and ``L`` through ``p``.

    ``P(s) = q - s p`` and ``L(t) = l + t m`` where ``q = m = l x p`` is the
    point of ``l`` (and the line through ``p``) orthogonal to ``p`` (resp. ``l``).
    """

    l: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        l = hom(self.l)
        p = hom(self.p)
        if abs(p @ l) > TOL * scale(p) * scale(l):
            raise ValueError("base pair of an alpha-surface must be incident")
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "p", p)

    @property
    def q(self) -> np.ndarray:
        return np.cross(self.l, self.p)

    def point(self, s, t) -> tuple[np.ndarray, np.ndarray]:
        q = self.q
        return q - s * self.p, self.l + t * q


def alpha_surface_point(chart: AlphaSurfaceChart, s: float, t: float):
    """The pair ``(P(s), L(t))`` on the alpha-surface; rejects incident output."""
    P, L = chart.point(s, t)
    if abs(P @ L) <= TOL * scale(P) * scale(L):
        raise IncidentOutput("sampled pair is incident; resample (s, t)")
    return P, L


def alpha_surface_tangents(chart: AlphaSurfaceChart, s: float, t: float):
    """Chart point and the two coordinate tangent vectors ``d/ds``, ``d/dt``.

    Exact derivatives via first-order jets of the chart map.
    """
    alpha_surface_point(chart, s, t)
    space = jet_space(2, 1)
    S, T = space.variables([s, t])
    q, p, l = chart.q, chart.p, chart.l
    P = [q[i] - S * p[i] for i in range(3)]
    L = [l[i] + T * q[i] for i in range(3)]
    P = [c / P[2] for c in P]
    PL = P[0] * L[0] + P[1] * L[1] + P[2] * L[2]
    coords = [P[0], P[1], L[0] / PL, L[1] / PL]
    m = FlatPairM(*(c.value for c in coords))
    J = np.array([c.grad for c in coords])  # rows: coordinates, columns: (s, t)
    return m, J[:, 0], J[:, 1]


def random_alpha_chart(rng: np.random.Generator) -> AlphaSurfaceChart:
    l = rng.standard_normal(3)
    p = np.cross(l, rng.standard_normal(3))
    return AlphaSurfaceChart(l, p / np.abs(p).max())


def random_pair(rng: np.random.Generator, min_incidence: float = 0.1):
    """Random non-incident (P, L) with ``|P.L| >= min_incidence`` after normalisation."""
    while True:
        P = rng.standard_normal(3)
        L = rng.standard_normal(3)
        P /= np.abs(P).max()
        L /= np.abs(L).max()
        if abs(P @ L) >= min_incidence:
            return P, L


def dancing_partner(rng: np.random.Generator, P, L, min_incidence: float = 0.1):
    """Random ``(P~, L~)`` dancing with ``(P, L)``.

    Pick ``L~`` at random, then ``P~`` on the line through ``P`` and ``L ^ L~``.
    """
    while True:
        Lt = rng.standard_normal(3)
        Lt /= np.abs(Lt).max()
        c = np.cross(L, Lt)
        line = np.cross(P, c)
        Pt = np.cross(line, rng.standard_normal(3))
        Pt /= np.abs(Pt).max()
        if abs(Pt @ Lt) < min_incidence:
            continue
        if np.abs(np.cross(Pt, P)).max() < 0.05 or np.abs(np.cross(Lt, L)).max() < 0.05:
            continue
        return Pt, Lt
