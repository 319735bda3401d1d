"""Dancing of (point, ellipse) pairs for origin-centred ellipses of area pi.

An ellipse ``E x^2 + 2 F x y + G y^2 = 1`` with ``E G - F^2 = 1``, ``E > 0`` is
parametrised by the upper half-plane through ``E = (a^2 + b^2)/b``,
``F = -a/b``, ``G = 1/b``.  The special linear group acts on points by
``u -> h u`` and on ellipses by ``Q -> h^-T Q h^-1`` (``Q`` the symmetric
form ``[[E, F], [F, G]]``), preserving incidence.

The null cone of the dancing condition is the sextic on the section
``x = 1, y = 0, a = 0``; elsewhere it is pulled back through the unique
group element moving a state onto that section.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IncidentPoint, NoBranch, NoRealEllipse, OriginPoint, StepBlowUp

NULL_TOL = 1e-8


# --------------------------------------------------------------------------
# ellipse coordinates


@dataclass(frozen=True)
class EllipseZ:
    a: float
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("half-plane coordinate b must be positive")

    @property
    def efg(self) -> tuple[float, float, float]:
        a, b = self.a, self.b
        return (a * a + b * b) / b, -a / b, 1.0 / b

    @property
    def form(self) -> np.ndarray:
        E, F, G = self.efg
        return np.array([[E, F], [F, G]])

    @classmethod
    def from_efg(cls, E, F, G) -> "EllipseZ":
        if not E > 0:
            raise ValueError("E must be positive")
        return cls(-F / G, 1.0 / G)

    @classmethod
    def from_form(cls, Q) -> "EllipseZ":
        Q = np.asarray(Q, dtype=float)
        return cls.from_efg(Q[0, 0], 0.5 * (Q[0, 1] + Q[1, 0]), Q[1, 1])


def incidence_phi(x, y, a, b):
    """``(a^2 + b^2) x^2 - 2 a x y + y^2 - b``; zero iff ``(x, y)`` lies on the ellipse."""
    return (a * a + b * b) * x * x - 2 * a * x * y + y * y - b


# --------------------------------------------------------------------------
# states and the section


@dataclass(frozen=True)
class EllipseState:
    """A non-incident pair with a tangent vector ``(xdot, ydot, adot, bdot)``."""

    x: float
    y: float
    a: float
    b: float
    v: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("b must be positive")
        object.__setattr__(self, "v", tuple(float(c) for c in self.v))

    @property
    def phi(self) -> float:
        return incidence_phi(self.x, self.y, self.a, self.b)

    @property
    def component(self) -> str:
        """``"inside"`` when the point lies inside its ellipse, ``"outside"`` otherwise."""
        return "inside" if self.phi < 0 else "outside"

    def transformed(self, h) -> "EllipseState":
        """Act with ``h`` in SL(2, R) on point, ellipse and tangent."""
        h = np.asarray(h, dtype=float)
        hinv = _inv2(h)
        u = h @ [self.x, self.y]
        udot = h @ self.v[:2]
        z = EllipseZ(self.a, self.b)
        Q = hinv.T @ z.form @ hinv
        Qdot = hinv.T @ form_velocity(self.a, self.b, *self.v[2:]) @ hinv
        z2 = EllipseZ.from_form(Q)
        adot, bdot = half_plane_velocity(Q, Qdot)
        return EllipseState(u[0], u[1], z2.a, z2.b, (udot[0], udot[1], adot, bdot))


def _inv2(h) -> np.ndarray:
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    return np.array([[h[1, 1], -h[0, 1]], [-h[1, 0], h[0, 0]]]) / det


def form_velocity(a, b, adot, bdot) -> np.ndarray:
    """Derivative of ``[[E, F], [F, G]]`` along ``(adot, bdot)``."""
    dE = (2 * a * adot + 2 * b * bdot) / b - (a * a + b * b) * bdot / (b * b)
    dF = -adot / b + a * bdot / (b * b)
    dG = -bdot / (b * b)
    return np.array([[dE, dF], [dF, dG]])


def half_plane_velocity(Q, Qdot) -> tuple[float, float]:
    """``(adot, bdot)`` from a form and its derivative (``a = -F/G``, ``b = 1/G``)."""
    F, G = Q[0, 1], Q[1, 1]
    dF, dG = Qdot[0, 1], Qdot[1, 1]
    return -dF / G + F * dG / (G * G), -dG / (G * G)


def section_element(x, y, a, b) -> np.ndarray:
    """The unique ``h`` in SL(2, R) with ``h u = (1, 0)`` and transformed ``a = 0``."""
    r2 = x * x + y * y
    if r2 == 0:
        raise OriginPoint("the origin is not a point of the plane minus the origin")
    h1 = np.array([[x / r2, y / r2], [-y, x]])
    h1inv = np.array([[x, -y / r2], [y, x / r2]])
    Q1 = h1inv.T @ EllipseZ(a, b).form @ h1inv
    s = Q1[0, 1] / Q1[0, 0]
    shear = np.array([[1.0, s], [0.0, 1.0]])
    return shear @ h1


def move_to_section(state: EllipseState):
    """``(h, b_sigma, v_sigma)`` for the canonical move of ``state`` onto the section."""
    h = section_element(state.x, state.y, state.a, state.b)
    moved = state.transformed(h)
    return h, moved.b, np.array(moved.v)


# --------------------------------------------------------------------------
# the sextic and its oracle


def _check_section_b(b):
    if not b > 0:
        raise ValueError("b must be positive")
    if abs(b - 1.0) <= 1e-12:
        raise IncidentPoint("b = 1 is the incident point of the section")


def sextic_terms(b, v) -> tuple:
    """The five monomial terms of the sextic on the section (their sum is the sextic)."""
    xd, yd, ad, bd = (float(c) for c in v)
    return (
        b ** 4 * bd ** 2 * xd ** 4,
        -4 * b ** 3 * ad * bd * xd ** 3 * yd,
        2 * b ** 2 * (((b - 2) * b - 1) * bd ** 2 - 2 * (b - 1) * ad ** 2) * xd ** 2 * yd ** 2,
        4 * b * (1 - b ** 2) * ad * bd * xd * yd ** 3,
        (b - 1) ** 2 * ((b - 1) ** 2 * bd ** 2 - 4 * b * ad ** 2) * yd ** 4,
    )


def sextic_sigma(b, v) -> float:
    """The dancing sextic on the section ``x = 1, y = 0, a = 0``."""
    _check_section_b(b)
    return float(sum(sextic_terms(b, v)))


def sextic_scale(b, v) -> float:
    """Sum of the absolute values of the monomial terms.

    The null test compares the sextic against this, so it measures
    cancellation and is homogeneous of the same bidegree as the sextic.
    """
    return float(sum(abs(t) for t in sextic_terms(b, v)))


def is_null_sigma(b, v, tol: float = NULL_TOL) -> bool:
    _check_section_b(b)
    return abs(sextic_sigma(b, v)) <= tol * sextic_scale(b, v)


def reduced_quadratics(b, v):
    """Coefficients ``(c0, c1, c2)`` of the two quadratics in ``P`` left after ``Y = P X``."""
    xd, yd, ad, bd = v
    first = (-b * (b - 1) * yd ** 2, -2 * b * xd * yd, b * xd ** 2 + (b - 1) * yd ** 2)
    second = (-b * b * bd, 2 * b * ad, bd)
    return first, second


def quadratic_resultant(a0, a1, a2, b0, b1, b2):
    """Resultant of ``a0 + a1 P + a2 P^2`` and ``b0 + b1 P + b2 P^2``."""
    return (a0 * b2 - a2 * b0) ** 2 - (a0 * b1 - a1 * b0) * (a1 * b2 - a2 * b1)


def _projective_roots(c0, c1, c2):
    """Roots ``(P, W)`` of ``c2 P^2 + c1 P W + c0 W^2`` as unit complex pairs."""
    if c2 == 0 and c1 == 0 and c0 == 0:
        return None
    if c2 != 0:
        disc = np.sqrt(complex(c1 * c1 - 4 * c2 * c0))
        roots = [((-c1 + disc) / (2 * c2), 1.0), ((-c1 - disc) / (2 * c2), 1.0)]
    elif c1 != 0:
        roots = [(1.0, 0.0), (-c0 / c1, 1.0)]
    else:
        roots = [(1.0, 0.0), (1.0, 0.0)]
    out = []
    for P, W in roots:
        vec = np.array([P, W], dtype=complex)
        out.append(vec / np.linalg.norm(vec))
    return out


def null_oracle_sigma(b, v, tol: float = NULL_TOL):
    """Common-root test for the two reduced quadratics.

    Returns ``(is_null, common_root)`` where ``common_root`` is the shared
    value of ``P`` (``inf`` for the root at infinity) or ``None`` when no
    particular root is singled out.  Roots are taken projectively and over
    the complex numbers, so degenerate leading coefficients are handled.
    """
    _check_section_b(b)
    first, second = reduced_quadratics(b, v)
    roots = _projective_roots(*second)
    if roots is None:
        return True, None
    a0, a1, a2 = first
    if a0 == 0 and a1 == 0 and a2 == 0:
        return True, None
    best, best_val = None, np.inf
    for P, W in roots:
        terms = np.array([a2 * P * P, a1 * P * W, a0 * W * W])
        size = np.abs(terms).sum()
        val = abs(terms.sum()) / size if size > 0 else 0.0
        if val < best_val:
            best, best_val = (P, W), val
    if best_val > tol:
        return False, None
    P, W = best
    if abs(W) <= 1e-14:
        return True, float("inf")
    root = P / W
    return True, (float(root.real) if abs(root.imag) <= 1e-9 * max(1.0, abs(root)) else complex(root))


def sextic_general(state: EllipseState) -> float:
    """The sextic at an arbitrary state, via the canonical section move."""
    _, b, v = move_to_section(state)
    return sextic_sigma(b, v)


def null_tangent_on_section(b, xd, yd, P, bd=1.0):
    """``adot`` making ``(xd, yd, adot, bd)`` null through the common root ``P``.

    ``P`` must be a root of the first reduced quadratic; ``adot`` is chosen so
    that it is a root of the second as well.
    """
    return (b * b * bd - bd * P * P) / (2 * b * P)


def first_quadratic_roots(b, xd, yd) -> list:
    """Roots in ``P`` of the first reduced quadratic (complex when not real)."""
    (a0, a1, a2), _ = reduced_quadratics(b, (xd, yd, 0.0, 0.0))
    if a2 == 0:
        return [] if a1 == 0 else [complex(-a0 / a1)]
    sq = np.sqrt(complex(a1 * a1 - 4 * a2 * a0))
    return [(-a1 + sq) / (2 * a2), (-a1 - sq) / (2 * a2)]


def quartic_in_udot(b, ad, bd) -> np.ndarray:
    """Coefficients in ``w = xdot/ydot`` (highest first) of the sextic at fixed ``zdot``."""
    return np.array([
        b ** 4 * bd ** 2,
        -4 * b ** 3 * ad * bd,
        2 * b ** 2 * (((b - 2) * b - 1) * bd ** 2 - 2 * (b - 1) * ad ** 2),
        4 * b * (1 - b ** 2) * ad * bd,
        (b - 1) ** 2 * ((b - 1) ** 2 * bd ** 2 - 4 * b * ad ** 2),
    ])


def quadratic_in_zdot(b, xd, yd) -> np.ndarray:
    """Symmetric 2x2 matrix of the sextic as a quadratic form in ``(adot, bdot)``."""
    aa = -4 * b ** 2 * (b - 1) * xd ** 2 * yd ** 2 - 4 * b * (b - 1) ** 2 * yd ** 4
    bb = (b ** 4 * xd ** 4 + 2 * b ** 2 * ((b - 2) * b - 1) * xd ** 2 * yd ** 2
          + (b - 1) ** 4 * yd ** 4)
    ab = 0.5 * (-4 * b ** 3 * xd ** 3 * yd + 4 * b * (1 - b ** 2) * xd * yd ** 3)
    return np.array([[aa, ab], [ab, bb]])


def zdot_binary_form(b, xd, yd) -> np.ndarray:
    """Coefficients in ``r = adot/bdot`` (highest first) of the sextic at fixed ``udot``."""
    Q = quadratic_in_zdot(b, xd, yd)
    return np.array([Q[0, 0], 2 * Q[0, 1], Q[1, 1]])


def count_real_directions(coeffs, tol: float = 1e-9) -> int:
    """Number of distinct real projective roots of a binary form (given in ``w``)."""
    c = np.asarray(coeffs, dtype=float)
    s = np.abs(c).max()
    if s == 0:
        raise ValueError("the zero form has no distinguished roots")
    count = 0
    if abs(c[0]) <= tol * s:
        count += 1  # root at infinity
        nz = np.flatnonzero(np.abs(c) > tol * s)
        c = c[nz[0]:]
    if len(c) == 3:
        disc = c[1] * c[1] - 4 * c[0] * c[2]
        if abs(disc) <= 1e-12 * (c[1] * c[1] + abs(4 * c[0] * c[2])):
            disc = 0.0
        sq = np.sqrt(complex(disc))
        roots = [(-c[1] + sq) / (2 * c[0]), (-c[1] - sq) / (2 * c[0])]
    else:
        roots = np.roots(c) if len(c) > 1 else []
    real = sorted(complex(r).real for r in roots
                  if abs(complex(r).imag) <= 1e-7 * max(1.0, abs(r)))
    distinct = []
    for r in real:
        if not distinct or abs(r - distinct[-1]) > 1e-7 * max(1.0, abs(r)):
            distinct.append(r)
    return count + len(distinct)


# --------------------------------------------------------------------------
# the path ODE y'' = (x y' - y)^3


def path_rhs(x, y, p):
    return (x * p - y) ** 3


def _rk4_step(x, y, p, h):
    k1y, k1p = p, path_rhs(x, y, p)
    k2y, k2p = p + 0.5 * h * k1p, path_rhs(x + 0.5 * h, y + 0.5 * h * k1y, p + 0.5 * h * k1p)
    k3y, k3p = p + 0.5 * h * k2p, path_rhs(x + 0.5 * h, y + 0.5 * h * k2y, p + 0.5 * h * k2p)
    k4y, k4p = p + h * k3p, path_rhs(x + h, y + h * k3y, p + h * k3p)
    return (y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y),
            p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))


def path_ode_integrate(x0, y0, p0, x_end, step=1e-3, max_slope: float = 1e3) -> np.ndarray:
    """Classical RK4 for ``y'' = (x y' - y)^3`` from ``x0`` to ``x_end``.

    Returns an ``(n, 3)`` array of ``(x, y, y')``.  The sign of the step is
    taken from ``x_end - x0``; the last step is shortened to land exactly on
    ``x_end``.  Raises :class:`StepBlowUp` once ``|y'|`` exceeds ``max_slope``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    span = x_end - x0
    n = max(1, int(np.ceil(abs(span) / step - 1e-12)))
    h = span / n
    out = np.empty((n + 1, 3))
    x, y, p = float(x0), float(y0), float(p0)
    out[0] = x, y, p
    for i in range(1, n + 1):
        y, p = _rk4_step(x, y, p, h)
        x = x0 + i * h
        if not np.isfinite(p) or abs(p) > max_slope:
            raise StepBlowUp(f"|y'| exceeded {max_slope:g} near x = {x:.6g} (vertical tangent)")
        out[i] = x, y, p
    return out


def ellipse_fit(x0, y0, p0=None, direction=None) -> EllipseZ:
    """The area-pi origin-centred ellipse through ``(x0, y0)`` with slope ``p0``.

    ``direction`` may be given instead of the slope (e.g. ``(0, 1)`` for a
    vertical tangent).  The solution is found on the section: move the point
    to ``(1, 0)``, where the ellipse is ``E = 1``, ``F = -d1/d2``,
    ``G = 1 + F^2``, then pull back.
    """
    if direction is None:
        if p0 is None:
            raise ValueError("give either a slope or a direction")
        direction = (1.0, p0)
    r2 = x0 * x0 + y0 * y0
    if r2 == 0:
        raise OriginPoint("no ellipse is centred at the point itself")
    h = np.array([[x0 / r2, y0 / r2], [-y0, x0]])
    d = h @ np.asarray(direction, dtype=float)
    if abs(d[1]) <= 1e-14 * np.linalg.norm(d):
        raise NoRealEllipse("radial direction: no centred ellipse is tangent to it")
    F = -d[0] / d[1]
    Q1 = np.array([[1.0, F], [F, 1.0 + F * F]])
    Q = h.T @ Q1 @ h
    Q = 0.5 * (Q + Q.T)
    if not Q[0, 0] > 0:
        raise NoRealEllipse("fitted form is not positive")
    return EllipseZ.from_form(Q)


def fit_residuals(x0, y0, p0, z: EllipseZ) -> np.ndarray:
    """Residuals of the three equations defining :func:`ellipse_fit`."""
    E, F, G = z.efg
    return np.array([
        E * x0 ** 2 + 2 * F * x0 * y0 + G * y0 ** 2 - 1,
        E * x0 + F * (y0 + x0 * p0) + G * y0 * p0,
        E * G - F * F - 1,
    ])


def write_trajectory_csv(traj, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "yprime"])
        for x, y, p in traj:
            w.writerow([repr(float(x)), repr(float(y)), repr(float(p))])


# --------------------------------------------------------------------------
# the dual ODE on horocycles


def horocycle_b(u, a, branch: str = "upper") -> float:
    """``b`` with ``Phi(u, a, b) = 0`` on the chosen branch of the horocycle."""
    x, y = u
    c = (a * x - y) ** 2
    if x == 0:
        if y == 0:
            raise OriginPoint("u must be nonzero")
        return y * y
    disc = 1.0 - 4 * x * x * c
    if disc < 0:
        raise NoBranch(f"horocycle of {tuple(u)} does not reach a = {a}")
    root = np.sqrt(disc)
    # lower root via the product of roots c / x^2, avoiding 1 - root cancellation
    b = (1.0 + root) / (2 * x * x) if branch == "upper" else 2 * c / (1.0 + root)
    if not b > 0:
        raise NoBranch("no positive b on this branch")
    return b


def horocycle_derivatives(u, a, b):
    """``(b', b'')`` along ``Phi(u, a, b(a)) = 0`` by implicit differentiation."""
    x, y = u
    pa = 2 * a * x * x - 2 * x * y
    pb = 2 * b * x * x - 1
    if pb == 0:
        raise NoBranch("vertical tangent of the horocycle")
    b1 = -pa / pb
    paa, pbb, pab = 2 * x * x, 2 * x * x, 0.0
    b2 = -(paa + 2 * pab * b1 + pbb * b1 * b1) / pb
    return b1, b2


def dual_rhs(b, b1, eps):
    s = 1.0 + b1 * b1
    root = np.sqrt(s)
    # sqrt(s) - 1 = b1^2 / (sqrt(s) + 1) keeps precision for small slopes
    gap = b1 * b1 / (root + 1.0) if eps > 0 else root + 1.0
    return eps * gap * s / b


def dual_ode_residual(u, a, eps, branch: str = "upper") -> float:
    """``b'' - eps (sqrt(1 + b'^2) - eps)(1 + b'^2)/b`` on a horocycle point."""
    b = horocycle_b(u, a, branch)
    b1, b2 = horocycle_derivatives(u, a, b)
    return float(b2 - dual_rhs(b, b1, eps))


# --------------------------------------------------------------------------
# the rotationally invariant metric with the same geodesics


def _metric_coeffs(r):
    q = 1.0 + r ** 4
    f = 1.0 / q ** 2
    g = r * r / q
    df = -8.0 * r ** 3 / q ** 3
    dg = 2.0 * r * (1.0 - r ** 4) / q ** 2
    return f, g, df, dg


def geodesic_rhs(state):
    """Geodesic flow of ``dr^2/(1+r^4)^2 + r^2 dth^2/(1+r^4)`` in ``(r, th, r', th')``."""
    r, th, rd, thd = state
    f, g, df, dg = _metric_coeffs(r)
    rdd = -(df / (2 * f)) * rd * rd + (dg / (2 * f)) * thd * thd
    thdd = -(dg / g) * rd * thd
    return np.array([rd, thd, rdd, thdd])


def _cartesian(state):
    r, th, rd, thd = state
    _, _, rdd, thdd = geodesic_rhs(state)
    c, s = np.cos(th), np.sin(th)
    x, y = r * c, r * s
    xd = rd * c - r * thd * s
    yd = rd * s + r * thd * c
    xdd = rdd * c - 2 * rd * thd * s - r * thdd * s - r * thd * thd * c
    ydd = rdd * s + 2 * rd * thd * c + r * thdd * c - r * thd * thd * s
    return x, y, xd, yd, xdd, ydd


def path_residual_homogeneous(x, y, xd, yd, xdd, ydd) -> float:
    """``(x' y'' - y' x'') - (x y' - y x')^3`` over ``|v|^3``.

    Equals ``x'^3 (y'' - (x y' - y)^3) / |v|^3`` in the graph chart, but stays
    finite at vertical tangents.
    """
    v3 = (xd * xd + yd * yd) ** 1.5
    return ((xd * ydd - yd * xdd) - (x * yd - y * xd) ** 3) / v3


@dataclass(frozen=True)
class GeodesicResult:
    trajectory: np.ndarray  # (n, 4) of (x, y, x', y') in Cartesian coordinates
    polar: np.ndarray  # (n, 4) of (r, th, r', th')
    max_residual: float


def metrisability_geodesic(r0, th0, direction, arc_length, step=1e-3) -> GeodesicResult:
    """Integrate a geodesic and measure how well it solves the path ODE.

    ``direction`` is ``(dr, dth)`` in polar components and is rescaled to unit
    speed.  The residual is :func:`path_residual_homogeneous` evaluated along
    the integrated states.
    """
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    dr, dth = direction
    f, g, _, _ = _metric_coeffs(r0)
    norm = np.sqrt(f * dr * dr + g * dth * dth)
    state = np.array([r0, th0, dr / norm, dth / norm], dtype=float)
    n = max(1, int(np.ceil(arc_length / step)))
    h = arc_length / n
    polar = np.empty((n + 1, 4))
    polar[0] = state
    for i in range(1, n + 1):
        # infinity is at finite distance; overflow is caught by the finiteness test
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = geodesic_rhs(state)
            k2 = geodesic_rhs(state + 0.5 * h * k1)
            k3 = geodesic_rhs(state + 0.5 * h * k2)
            k4 = geodesic_rhs(state + h * k3)
            state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)) or state[0] <= 0:
            raise StepBlowUp("geodesic left the punctured plane")
        polar[i] = state
    cart = np.array([_cartesian(s) for s in polar])
    res = max(abs(path_residual_homogeneous(*c)) for c in cart)
    return GeodesicResult(cart[:, :4], polar, float(res))
