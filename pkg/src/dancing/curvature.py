"""Curvature of four-dimensional neutral metrics and the Einstein ASD family.

Coordinates are ordered ``(x0, x1, zeta0, zeta1)``.  Metrics are supplied as
callables that map four coordinate jets to a symmetric 4x4 nested list of
jets; all curvature quantities are then evaluated from exact second-order
jets of the components.

Index conventions used throughout:

* ``dg[a, b, c] = d_c g_ab`` and ``ddg[a, b, c, d] = d_c d_d g_ab``;
* ``christoffel[a, b, c] = Gamma^a_bc``;
* ``riemann[a, b, c, d] = R^a_bcd`` with ``[nabla_c, nabla_d] V^a = R^a_bcd V^b``;
* ``ricci[b, d] = R^a_bad``; the round sphere has positive scalar curvature;
* two-forms are antisymmetric arrays with ``(alpha ^ beta)_ab = alpha_a beta_b - alpha_b beta_a``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateMetric, InconsistentRecurrence
from .jets import Jet, derivatives, jet_space, stack

DIM = 4
JET_ORDER = 3

# Projective Schouten tensor from the Ricci tensor of a 2D connection:
# P_BD = SCHOUTEN_SYM * Ric_(BD) + SCHOUTEN_SKEW * Ric_[BD], Ric_BD = R^A_BAD.
# Calibrated against the Einstein property of the family metric and the
# projective invariance of the Cotton obstruction (see tests).
SCHOUTEN_SYM = 1.0
SCHOUTEN_SKEW = -1.0 / 3.0

# Sign of eps_0123 / sqrt|det g|; chosen so that dx0 ^ dx1 is anti-self-dual.
ORIENTATION = -1

SIGMA1 = np.zeros((4, 4))
SIGMA1[0, 1], SIGMA1[1, 0] = 1.0, -1.0


# --------------------------------------------------------------------------
# metric fields


class MetricField4:
    """A four-dimensional metric given by jet-evaluable component functions.

    ``components(X)`` receives four coordinate jets and returns a symmetric
    4x4 nested sequence whose entries are jets or plain numbers.
    """

    def __init__(self, components: Callable[[Sequence[Jet]], Sequence], name: str = "metric",
                 order: int = JET_ORDER):
        self.components = components
        self.name = name
        self.order = order

    def coefficients(self, x) -> np.ndarray:
        space = jet_space(DIM, self.order)
        X = space.variables(x)
        return stack(self.components(X), space)

    def jet(self, x, upto: int = 2):
        """``(g, dg, ddg)`` at ``x``; derivative axes are appended last."""
        space = jet_space(DIM, self.order)
        out = derivatives(self.coefficients(x), space, upto)
        g = out[0]
        if not np.allclose(g, g.T, rtol=0, atol=1e-14 * max(1.0, np.abs(g).max())):
            raise ValueError(f"{self.name}: metric components are not symmetric")
        return out

    def value(self, x) -> np.ndarray:
        return self.jet(x, upto=0)[0]

    def __repr__(self):
        return f"MetricField4({self.name!r})"


def dancing_metric() -> MetricField4:
    """The flat-model dancing metric ``d zeta_A d x^A + (zeta . dx)^2``."""

    def comps(X):
        x0, x1, z0, z1 = X
        return [
            [z0 * z0, z0 * z1, 0.5, 0.0],
            [z0 * z1, z1 * z1, 0.0, 0.5],
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.0],
        ]

    return MetricField4(comps, name="dancing")


def walker_flat_metric() -> MetricField4:
    """The flat neutral metric ``d zeta_A d x^A``."""

    def comps(X):
        return [
            [0.0, 0.0, 0.5, 0.0],
            [0.0, 0.0, 0.0, 0.5],
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.0],
        ]

    return MetricField4(comps, name="flat")


# --------------------------------------------------------------------------
# curvature


@dataclass(frozen=True)
class CurvaturePack:
    metric: np.ndarray
    inverse: np.ndarray
    christoffel: np.ndarray
    christoffel_derivative: np.ndarray  # [a, b, c, e] = d_e Gamma^a_bc
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray  # all indices down

    @property
    def riemann_down(self) -> np.ndarray:
        return np.einsum("ae,ebcd->abcd", self.metric, self.riemann)

    @property
    def traceless_ricci(self) -> np.ndarray:
        return self.ricci - self.scalar / DIM * self.metric

    @property
    def einstein_constant(self) -> float:
        return self.scalar / DIM


def christoffel_from_jet(g, dg):
    ginv = np.linalg.inv(g)
    # lowered: Gamma_dbc = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    low = 0.5 * (np.einsum("dcb->dbc", dg) + dg - np.einsum("bcd->dbc", dg))
    return np.einsum("ad,dbc->abc", ginv, low), ginv


def curvature_from_jet(g, dg, ddg) -> CurvaturePack:
    g = np.asarray(g, dtype=float)
    scale = max(1.0, float(np.abs(g).max()))
    det = np.linalg.det(g)
    if abs(det) < 1e-12 * scale ** DIM:
        raise DegenerateMetric(f"metric is degenerate (det = {det:.3e})")
    gam, ginv = christoffel_from_jet(g, dg)

    # d_e g^{ad} = -g^{ap} d_e g_pq g^{qd}
    dginv = -np.einsum("ap,pqe,qd->ade", ginv, dg, ginv)
    low = 0.5 * (np.einsum("dcb->dbc", dg) + dg - np.einsum("bcd->dbc", dg))
    # d_e of the lowered symbol
    dlow = 0.5 * (np.einsum("dcbe->dbce", ddg) + ddg - np.einsum("bcde->dbce", ddg))
    dgam = np.einsum("ade,dbc->abce", dginv, low) + np.einsum("ad,dbce->abce", ginv, dlow)

    # R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    riem = (np.einsum("adbc->abcd", dgam) - np.einsum("acbd->abcd", dgam)
            + np.einsum("ace,edb->abcd", gam, gam) - np.einsum("ade,ecb->abcd", gam, gam))
    ric = np.einsum("abad->bd", riem)
    scal = float(np.einsum("bd,bd->", ginv, ric))
    weyl = weyl_tensor(np.einsum("ae,ebcd->abcd", g, riem), ric, scal, g)
    return CurvaturePack(g, ginv, gam, dgam, riem, ric, scal, weyl)


def weyl_tensor(rdown, ric, scal, g):
    n = DIM
    kn = (np.einsum("ac,bd->abcd", g, ric) - np.einsum("ad,bc->abcd", g, ric)
          - np.einsum("bc,ad->abcd", g, ric) + np.einsum("bd,ac->abcd", g, ric))
    gg = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    return rdown - kn / (n - 2) + scal / ((n - 1) * (n - 2)) * gg


def curvature(field: MetricField4, x) -> CurvaturePack:
    g, dg, ddg = field.jet(x)
    return curvature_from_jet(g, dg, ddg)


def christoffel_fd(field: MetricField4, x, h: float = 1e-4) -> np.ndarray:
    """Christoffel symbols from central differences of the metric values."""
    x = np.asarray(x, dtype=float)
    g = field.value(x)
    dg = np.empty((DIM, DIM, DIM))
    for c in range(DIM):
        e = np.zeros(DIM)
        e[c] = h
        dg[:, :, c] = (field.value(x + e) - field.value(x - e)) / (2 * h)
    return christoffel_from_jet(g, dg)[0]


# --------------------------------------------------------------------------
# Hodge star and the Weyl split

_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _levi_civita() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inversions = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


_EPS = _levi_civita()


def hodge_star(g, orientation: int = ORIENTATION) -> np.ndarray:
    """Hodge star on two-forms as a 6x6 matrix on the ``_PAIRS`` basis."""
    ginv = np.linalg.inv(g)
    vol = orientation * np.sqrt(abs(np.linalg.det(g))) * _EPS
    # (*F)_ab = 1/2 eps_ab^cd F_cd
    mixed = np.einsum("abef,ec,fd->abcd", vol, ginv, ginv)
    star = np.empty((6, 6))
    for col, (c, d) in enumerate(_PAIRS):
        # unit two-form with F_cd = 1, F_dc = -1
        for row, (a, b) in enumerate(_PAIRS):
            star[row, col] = mixed[a, b, c, d]
    return star


def two_form_vector(F) -> np.ndarray:
    F = np.asarray(F)
    return np.array([F[a, b] for a, b in _PAIRS])


def weyl_operator(pack: CurvaturePack) -> np.ndarray:
    """Weyl tensor as a 6x6 map on two-forms: F_ab -> 1/2 C_ab^cd F_cd."""
    mixed = np.einsum("abef,ec,fd->abcd", pack.weyl, pack.inverse, pack.inverse)
    W = np.empty((6, 6))
    for col, (c, d) in enumerate(_PAIRS):
        for row, (a, b) in enumerate(_PAIRS):
            W[row, col] = mixed[a, b, c, d]
    return W


def _eigenbasis(proj: np.ndarray) -> np.ndarray:
    u, s, _ = np.linalg.svd(proj)
    return u[:, :3]


def weyl_split(pack: CurvaturePack, orientation: int = ORIENTATION):
    """Self-dual and anti-self-dual Weyl halves as 3x3 matrices.

    Each half is the Weyl operator restricted to the +1 (resp. -1)
    eigenspace of the Hodge star, written in an orthonormal (Euclidean)
    basis of that eigenspace.  Flipping ``orientation`` swaps the outputs.
    """
    star = hodge_star(pack.metric, orientation)
    W = weyl_operator(pack)
    out = []
    for sign in (1.0, -1.0):
        proj = 0.5 * (np.eye(6) + sign * star)
        U = _eigenbasis(proj)
        out.append(np.linalg.pinv(U) @ proj @ W @ U)
    return out[0], out[1]


# --------------------------------------------------------------------------
# projective structures in two dimensions


class ProjConn2D:
    """A torsion-free affine connection on the plane.

    ``gamma(x0, x1)`` returns a nested ``[C][A][B]`` array of
    ``Gamma^C_AB`` (jets or numbers), symmetric in ``A, B``.
    """

    def __init__(self, gamma: Callable, name: str = "connection"):
        self.gamma = gamma
        self.name = name

    def __repr__(self):
        return f"ProjConn2D({self.name!r})"

    @classmethod
    def zero(cls) -> "ProjConn2D":
        return cls(lambda x0, x1: [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]], "zero")

    @classmethod
    def round_sphere(cls) -> "ProjConn2D":
        """Levi-Civita connection of the round sphere in a Beltrami (gnomonic) chart.

        ``Gamma^C_AB = -(x_A delta^C_B + x_B delta^C_A) / (1 + |x|^2)``; its
        geodesics are straight lines, so it is projectively flat.
        """

        def gamma(x0, x1):
            x = (x0, x1)
            w = 1.0 / (1.0 + x0 * x0 + x1 * x1)
            out = [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
            for C in range(2):
                for A in range(2):
                    for B in range(2):
                        term = 0.0
                        if C == B:
                            term = term + x[A]
                        if C == A:
                            term = term + x[B]
                        if not (isinstance(term, float) and term == 0.0):
                            out[C][A][B] = -term * w
            return out

        return cls(gamma, "round-sphere")

    @classmethod
    def polynomial(cls, coeffs, name: str = "polynomial") -> "ProjConn2D":
        """Polynomial components from ``coeffs[C][A][B] = {(i, j): c}`` for ``c x0^i x1^j``.

        The coefficients of ``[C][A][B]`` and ``[C][B][A]`` are symmetrised.
        """
        table = [[[dict(coeffs[C][A][B]) for B in range(2)] for A in range(2)] for C in range(2)]

        def gamma(x0, x1):
            out = [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
            for C in range(2):
                for A in range(2):
                    for B in range(2):
                        total = 0.0
                        for src in (table[C][A][B], table[C][B][A]):
                            for (i, j), c in src.items():
                                total = total + 0.5 * c * x0 ** i * x1 ** j
                        out[C][A][B] = total
            return out

        return cls(gamma, name)

    @classmethod
    def random_polynomial(cls, rng: np.random.Generator, degree: int = 2,
                          scale: float = 0.5) -> "ProjConn2D":
        monos = [(i, d - i) for d in range(degree + 1) for i in range(d + 1)]
        coeffs = [[[{} for _ in range(2)] for _ in range(2)] for _ in range(2)]
        for C in range(2):
            for A in range(2):
                for B in range(A, 2):
                    coeffs[C][A][B] = {m: float(scale * rng.standard_normal()) for m in monos}
        return cls.polynomial(coeffs, name=f"random-degree-{degree}")

    def projective_change(self, upsilon: Callable, name: str | None = None) -> "ProjConn2D":
        """``Gamma^C_AB + delta^C_A Y_B + delta^C_B Y_A`` for a one-form ``Y = upsilon(x0, x1)``."""
        base = self.gamma

        def gamma(x0, x1):
            g = base(x0, x1)
            Y = upsilon(x0, x1)
            out = [[[g[C][A][B] for B in range(2)] for A in range(2)] for C in range(2)]
            for C in range(2):
                for A in range(2):
                    for B in range(2):
                        if C == A:
                            out[C][A][B] = out[C][A][B] + Y[B]
                        if C == B:
                            out[C][A][B] = out[C][A][B] + Y[A]
            return out

        return ProjConn2D(gamma, name or f"{self.name}+projective-change")


def _as_jet_array(arr, space):
    return np.array([[[a if isinstance(a, Jet) else space.constant(float(a)) for a in row]
                      for row in mat] for mat in arr], dtype=object)


def _connection_jets(conn: ProjConn2D, X):
    space = X[0].space
    return _as_jet_array(conn.gamma(X[0], X[1]), space)


def _schouten_jets(gam):
    """Projective Schouten tensor (jets) from connection jets ``gam[C, A, B]``."""
    # R^A_BCD = d_C Gamma^A_DB - d_D Gamma^A_CB + Gamma^A_CE Gamma^E_DB - Gamma^A_DE Gamma^E_CB
    ric = np.empty((2, 2), dtype=object)
    for B in range(2):
        for D in range(2):
            total = 0.0
            for A in range(2):
                C = A
                total = total + gam[A, D, B].diff(C) - gam[A, C, B].diff(D)
                for E in range(2):
                    total = total + gam[A, C, E] * gam[E, D, B] - gam[A, D, E] * gam[E, C, B]
            ric[B, D] = total
    P = np.empty((2, 2), dtype=object)
    for B in range(2):
        for D in range(2):
            sym = (ric[B, D] + ric[D, B]) * 0.5
            skew = (ric[B, D] - ric[D, B]) * 0.5
            P[B, D] = sym * SCHOUTEN_SYM + skew * SCHOUTEN_SKEW
    return P


def _embed2(x):
    x = np.asarray(x, dtype=float)
    if x.shape == (2,):
        return np.array([x[0], x[1], 0.0, 0.0])
    return x


def schouten(conn: ProjConn2D, x) -> np.ndarray:
    """Projective Schouten tensor ``P_AB`` at a point of the plane."""
    X = jet_space(DIM, JET_ORDER).variables(_embed2(x))
    P = _schouten_jets(_connection_jets(conn, X))
    return np.array([[P[A, B].value for B in range(2)] for A in range(2)])


def _obstruction_from_jets(gam, P):
    # nabla_A P_BC = d_A P_BC - Gamma^D_AB P_DC - Gamma^D_AC P_BD
    nab = np.empty((2, 2, 2))
    for A in range(2):
        for B in range(2):
            for C in range(2):
                v = P[B, C].diff(A).value
                for D in range(2):
                    v -= gam[D, A, B].value * P[D, C].value + gam[D, A, C].value * P[B, D].value
                nab[A, B, C] = v
    return 0.5 * (nab - nab.transpose(1, 0, 2))


def flatness_obstruction(conn: ProjConn2D, x) -> np.ndarray:
    """``nabla_[A P_B]C`` as an array ``T[A, B, C]``; zero iff projectively flat."""
    X = jet_space(DIM, JET_ORDER).variables(_embed2(x))
    gam = _connection_jets(conn, X)
    return _obstruction_from_jets(gam, _schouten_jets(gam))


def _theta_jets(conn: ProjConn2D, X):
    gam = _connection_jets(conn, X)
    P = _schouten_jets(gam)
    z = X[2:]
    theta = np.empty((2, 2), dtype=object)
    for A in range(2):
        for B in range(2):
            t = z[A] * z[B] + (P[A, B] + P[B, A]) * 0.5
            for C in range(2):
                t = t - gam[C, A, B] * z[C]
            theta[A, B] = t
    return theta, gam, P


def build_family_metric(conn: ProjConn2D) -> MetricField4:
    """``d zeta_A . dx^A + Theta_AB dx^A . dx^B`` with
    ``Theta_AB = zeta_A zeta_B + P_(AB) - Gamma^C_AB zeta_C``.

    Symmetric products carry a factor 1/2, so the zero connection reproduces
    :func:`dancing_metric` exactly.
    """

    def comps(X):
        theta, _, _ = _theta_jets(conn, X)
        return [
            [theta[0, 0], theta[0, 1], 0.5, 0.0],
            [theta[1, 0], theta[1, 1], 0.0, 0.5],
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.0],
        ]

    return MetricField4(comps, name=f"family[{conn.name}]")


# --------------------------------------------------------------------------
# recurrence of Sigma_1 and the second beta-family identity

# Measured: with A normalised by dA = d zeta_A ^ dx^A + P_AB dx^A ^ dx^B, the
# recurrence reads nabla Sigma_1 = 3 A (x) Sigma_1 for the metric normalisation
# fixed by build_family_metric (see measure_recurrence_factor).
RECURRENCE_FACTOR = 3.0


def covariant_two_form(pack: CurvaturePack, sigma) -> np.ndarray:
    """``(nabla_m Sigma)_ab`` for a constant-coefficient two-form."""
    gam = pack.christoffel
    return -(np.einsum("lma,lb->mab", gam, sigma) + np.einsum("lmb,al->mab", gam, sigma))


def recurrence_one_form(field: MetricField4, x, sigma=SIGMA1, factor: float = RECURRENCE_FACTOR,
                        rtol: float = 1e-8, pack: CurvaturePack | None = None) -> np.ndarray:
    """One-form ``A`` with ``nabla Sigma_1 = factor * A (x) Sigma_1``.

    Extracted as the common ratio over the nonzero components of ``Sigma_1``;
    raises :class:`InconsistentRecurrence` when ``nabla Sigma_1`` is not
    proportional to ``Sigma_1``.
    """
    if pack is None:
        pack = curvature(field, x)
    sigma = np.asarray(sigma, dtype=float)
    nab = covariant_two_form(pack, sigma)
    k = np.argmax(np.abs(sigma).ravel())
    a, b = np.unravel_index(k, sigma.shape)
    A = nab[:, a, b] / (factor * sigma[a, b])
    predicted = factor * np.einsum("m,ab->mab", A, sigma)
    scale = max(1.0, float(np.abs(nab).max()))
    err = float(np.abs(nab - predicted).max())
    if err > rtol * scale:
        raise InconsistentRecurrence(f"nabla Sigma_1 is not proportional to Sigma_1 (err {err:.3e})")
    return A


def recurrence_curl(field: MetricField4, x, factor: float = RECURRENCE_FACTOR,
                    pack: CurvaturePack | None = None) -> np.ndarray:
    """Exterior derivative of the recurrence one-form, ``(dA)_nm = d_n A_m - d_m A_n``."""
    if pack is None:
        pack = curvature(field, x)
    dgam = pack.christoffel_derivative
    # d_n (nabla_m Sigma)_{01} = -(d_n Gamma^0_{m0} + d_n Gamma^1_{m1}) for Sigma_1
    sigma = SIGMA1
    dnab = -(np.einsum("lmae,lb->emab", dgam, sigma) + np.einsum("lmbe,al->emab", dgam, sigma))
    dA = dnab[:, :, 0, 1] / (factor * sigma[0, 1])
    return dA - dA.T


def symplectic_form(conn: ProjConn2D, x) -> np.ndarray:
    """``d zeta_A ^ dx^A + P_AB dx^A ^ dx^B`` as a 4x4 antisymmetric array."""
    P = schouten(conn, np.asarray(x)[:2])
    om = np.zeros((4, 4))
    for A in range(2):
        om[2 + A, A] += 1.0
        om[A, 2 + A] -= 1.0
    for A in range(2):
        for B in range(2):
            om[A, B] += P[A, B]
            om[B, A] -= P[A, B]
    return om


def _wedge1_2(alpha, sigma):
    return (np.einsum("l,mn->lmn", alpha, sigma) + np.einsum("m,nl->lmn", alpha, sigma)
            + np.einsum("n,lm->lmn", alpha, sigma))


def _wedge1_1_1(a, b, c):
    out = np.zeros((4, 4, 4))
    for perm, sign in ((("l", "m", "n"), 1), (("m", "n", "l"), 1), (("n", "l", "m"), 1),
                       (("m", "l", "n"), -1), (("l", "n", "m"), -1), (("n", "m", "l"), -1)):
        out += sign * np.einsum(f"{perm[0]},{perm[1]},{perm[2]}->lmn", a, b, c)
    return out


def frame_theta_jets(conn: ProjConn2D, X):
    """``zeta_A zeta_C + P_CA - Gamma^D_AC zeta_D`` with the full (unsymmetrised) Schouten tensor.

    Its symmetric part is ``Theta_AC``; the skew part drops out of the metric
    but keeps the coframe ``e_A`` invariant under projective changes.
    """
    gam = _connection_jets(conn, X)
    P = _schouten_jets(gam)
    z = X[2:]
    out = np.empty((2, 2), dtype=object)
    for A in range(2):
        for C in range(2):
            t = z[A] * z[C] + P[C, A]
            for D in range(2):
                t = t - gam[D, A, C] * z[D]
            out[A, C] = t
    return out, gam, P


def sigma2_jets(conn: ProjConn2D, X):
    """``Sigma_2 = eps^AB e_A ^ e_B`` with ``e_A = d zeta_A + Theta_AC dx^C`` (jets)."""
    theta, gam, P = frame_theta_jets(conn, X)
    space = X[0].space
    e = np.empty((2, 4), dtype=object)
    for A in range(2):
        for m in range(4):
            e[A, m] = space.constant(0.0)
        e[A, 2 + A] = space.constant(1.0)
        for C in range(2):
            e[A, C] = theta[A, C]
    sig = np.empty((4, 4), dtype=object)
    for m in range(4):
        for n in range(4):
            # eps^01 = 1, eps^10 = -1
            sig[m, n] = (e[0, m] * e[1, n] - e[0, n] * e[1, m]) * 2.0
    return sig, gam, P


def maple_identity_sides(conn: ProjConn2D, x, factor: float = RECURRENCE_FACTOR):
    """Both sides of ``dSigma_2 + k A ^ Sigma_2 = eps^CD nabla_[A P_B]C dx^A ^ dx^B ^ d zeta_D``.

    ``k`` is the recurrence constant of ``Sigma_1``.  The bracket on the right
    is the unnormalised antisymmetrisation ``nabla_A P_BC - nabla_B P_AC``,
    i.e. twice :func:`flatness_obstruction`.  Returns ``(lhs, rhs)`` as
    antisymmetric 4x4x4 arrays.
    """
    x = np.asarray(x, dtype=float)
    field = build_family_metric(conn)
    pack = curvature(field, x)
    A = recurrence_one_form(field, x, factor=factor, pack=pack)

    space = jet_space(DIM, JET_ORDER)
    X = space.variables(x)
    sig, gam, P = sigma2_jets(conn, X)
    sig_val = np.array([[sig[m, n].value for n in range(4)] for m in range(4)])
    dsig = np.array([[[sig[m, n].diff(l).value for n in range(4)] for m in range(4)]
                     for l in range(4)])
    d_sigma2 = dsig + dsig.transpose(1, 2, 0) + dsig.transpose(2, 0, 1)
    lhs = d_sigma2 + factor * _wedge1_2(A, sig_val)

    T = 2.0 * _obstruction_from_jets(gam, P)
    eps2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    basis = np.eye(4)
    rhs = np.zeros((4, 4, 4))
    for a in range(2):
        for b in range(2):
            for C in range(2):
                for D in range(2):
                    coef = eps2[C, D] * T[a, b, C]
                    if coef != 0.0:
                        rhs += coef * _wedge1_1_1(basis[a], basis[b], basis[2 + D])
    return lhs, rhs


def maple_identity_residual(conn: ProjConn2D, x, factor: float = RECURRENCE_FACTOR) -> float:
    lhs, rhs = maple_identity_sides(conn, x, factor)
    return float(np.abs(lhs - rhs).max())


def measure_recurrence_factor(conn: ProjConn2D, x) -> float:
    """Constant ``k`` in ``nabla Sigma_1 = k A (x) Sigma_1`` given ``dA = Omega``.

    Computed as the ratio between the curl of the unnormalised recurrence
    one-form and the symplectic form; all nonzero components must agree.
    """
    x = np.asarray(x, dtype=float)
    field = build_family_metric(conn)
    curl = recurrence_curl(field, x, factor=1.0)
    om = symplectic_form(conn, x)
    mask = np.abs(om) > 1e-12
    ratios = curl[mask] / om[mask]
    k = float(np.median(ratios))
    if np.abs(ratios - k).max() > 1e-8 * max(1.0, abs(k)):
        raise InconsistentRecurrence("curl of the recurrence form is not proportional to Omega")
    return k
