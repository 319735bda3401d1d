"""Homogeneous-coordinate primitives on the real projective plane.

Points and lines are plain length-3 numpy arrays (real or complex) and
conics are symmetric 3x3 arrays.  All of them are homogeneous: a quantity
built from them is only meaningful up to the product of the input scales,
so zero tests compare against ``tol * (product of input norms)``.  The
canonical scale puts the largest-magnitude component at absolute value one
(:func:`normalize`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    ProportionalConics,
    ProportionalInputs,
    SingularMatrix,
    SplitFailure,
    ZeroPolar,
)

TOL = 1e-9
ROOT_CLUSTER = 1e-6


def hom(v, dtype=None) -> np.ndarray:
    """Validate a homogeneous triple."""
    arr = np.asarray(v, dtype=dtype)
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    if arr.shape != (3,):
        raise ValueError(f"expected a homogeneous triple, got shape {arr.shape}")
    if not np.any(arr):
        raise ValueError("homogeneous coordinates must not all vanish")
    return arr


def conic(Q) -> np.ndarray:
    """Validate a conic matrix; it must be exactly symmetric."""
    arr = np.asarray(Q)
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    if arr.shape != (3, 3):
        raise ValueError(f"expected a 3x3 conic, got shape {arr.shape}")
    if not np.array_equal(arr, arr.T):
        raise ValueError("conic matrix must be symmetric")
    return arr


def scale(v) -> float:
    """Max-abs scale of a homogeneous object."""
    return float(np.abs(np.asarray(v)).max())


def normalize(v) -> np.ndarray:
    """Canonical representative: divide by the largest-magnitude component.

    For real input the result has its largest entry equal to +1 or -1 with
    the sign kept (antipodal representatives are compared up to sign by
    :func:`same_point`); complex input is divided by the entry itself, so
    that entry becomes exactly 1.
    """
    v = np.asarray(v)
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        raise ValueError("cannot normalise the zero vector")
    if np.iscomplexobj(v):
        return v / v[k]
    return v / abs(v[k])


def same_point(v, w, tol: float = TOL) -> bool:
    """Scale-invariant equality of homogeneous triples (real or complex)."""
    v = np.asarray(v)
    w = np.asarray(w)
    return bool(np.abs(np.cross(v, w)).max() <= tol * np.abs(v).max() * np.abs(w).max())


def is_zero(q, *scales, tol: float = TOL) -> bool:
    return abs(q) <= tol * float(np.prod([s for s in scales])) if scales else abs(q) <= tol


def cross_join(v, w) -> np.ndarray:
    """Line through two points, or point of intersection of two lines."""
    v = np.asarray(v)
    w = np.asarray(w)
    out = np.cross(v, w)
    if np.abs(out).max() <= TOL * np.linalg.norm(v) * np.linalg.norm(w):
        raise ProportionalInputs("inputs are proportional; join/meet is undefined")
    return out


def collinear_det(v1, v2, v3):
    """Determinant of three normalised triples; zero iff collinear/concurrent."""
    return np.linalg.det(np.array([normalize(v1), normalize(v2), normalize(v3)]))


def conic_apply(A, a) -> np.ndarray:
    """Polar line ``A a`` of the point ``a``; ``a . (A a)`` is the incidence value."""
    A = np.asarray(A)
    a = np.asarray(a)
    out = A @ a
    if np.abs(out).max() <= TOL * scale(A) * scale(a):
        raise ZeroPolar("polar line vanishes (singular point of a degenerate conic)")
    return out


def conic_value(A, a):
    """``a^T A a`` (not conjugated for complex ``a``)."""
    a = np.asarray(a)
    return a @ np.asarray(A) @ a


def design_row(p):
    x, y, z = p
    return np.array([x * x, x * y, y * y, x * z, y * z, z * z])


def _coeffs_to_matrix(c):
    c0, c1, c2, c3, c4, c5 = c
    return np.array([
        [c0, c1 / 2, c3 / 2],
        [c1 / 2, c2, c4 / 2],
        [c3 / 2, c4 / 2, c5],
    ])


def conic_through_five(*points) -> np.ndarray:
    """Unique conic through five points in general position (normalised)."""
    if len(points) == 1:
        points = tuple(points[0])
    if len(points) != 5:
        raise ValueError("need exactly five points")
    D = np.array([design_row(normalize(hom(p))) for p in points])
    _, s, vt = np.linalg.svd(D)
    if s[4] <= 1e-10 * s[0]:
        raise DegenerateConfiguration("five points do not determine a unique conic")
    return normalize_conic(_coeffs_to_matrix(vt[-1]))


def normalize_conic(Q) -> np.ndarray:
    Q = np.asarray(Q)
    k = np.unravel_index(np.argmax(np.abs(Q)), Q.shape)
    out = Q / abs(Q[k])
    return 0.5 * (out + out.T)


def six_point_conic_det(*points):
    """Determinant of the 6x6 conic design matrix over normalised points.

    Zero iff a conic passes through all six points.  Complex points are
    accepted and give a complex determinant.
    """
    if len(points) == 1:
        points = tuple(points[0])
    if len(points) != 6:
        raise ValueError("need exactly six points")
    D = np.array([design_row(normalize(p)) for p in points])
    return np.linalg.det(D)


# --------------------------------------------------------------------------
# pencils and conic intersection


def pencil_cubic(A, B) -> np.ndarray:
    """Coefficients ``[c3, c2, c1, c0]`` of ``det(A + l B)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    c0 = np.linalg.det(A)
    c3 = np.linalg.det(B)
    c1 = np.trace(adjugate(A) @ B)
    c2 = np.trace(A @ adjugate(B))
    return np.array([c3, c2, c1, c0])


def adjugate(M) -> np.ndarray:
    M = np.asarray(M)
    out = np.empty_like(M)
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(M, j, axis=0), i, axis=1)
            out[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return out


@dataclass(frozen=True)
class PencilRoots:
    """Roots of ``det(A + l B) = 0`` with multiplicities."""

    roots: tuple
    multiplicities: tuple

    def residuals(self, A, B) -> np.ndarray:
        A = np.asarray(A)
        B = np.asarray(B)
        return np.array([abs(np.linalg.det(A + r * B)) for r in self.roots])


def pencil_roots(A, B) -> PencilRoots:
    """Companion-matrix roots of the pencil cubic, clustered by multiplicity."""
    c = pencil_cubic(A, B)
    nz = np.flatnonzero(np.abs(c) > 1e-14 * np.abs(c).max())
    c = c[nz[0]:] if len(nz) else c
    raw = np.roots(c) if len(c) > 1 else np.array([])
    roots, mults = [], []
    for r in raw:
        for k, q in enumerate(roots):
            if abs(r - q) <= ROOT_CLUSTER * max(1.0, abs(q)):
                mults[k] += 1
                break
        else:
            roots.append(complex(r))
            mults.append(1)
    return PencilRoots(tuple(roots), tuple(mults))


def _split_degenerate(D):
    """Two lines (possibly complex) whose product is the rank <= 2 conic ``D``."""
    D = np.asarray(D, dtype=complex)
    s = np.abs(D).max()
    adj = adjugate(D)
    if np.abs(adj).max() <= 1e-10 * s * s:
        # double line: D = +-l l^T
        w, v = np.linalg.eigh(D.real)
        k = int(np.argmax(np.abs(w)))
        l = v[:, k].astype(complex)
        return l, l
    i = int(np.argmax(np.abs(np.diag(adj))))
    beta = np.sqrt(-adj[i, i])
    if beta == 0:
        raise SplitFailure("cannot split degenerate pencil member")
    p = adj[:, i] / beta
    px = np.array([[0, p[2], -p[1]], [-p[2], 0, p[0]], [p[1], -p[0], 0]])
    C = D + px
    r, c = np.unravel_index(np.argmax(np.abs(C)), C.shape)
    return C[r, :], C[:, c]


def _line_points(l):
    """Two independent points spanning the line ``l``."""
    l = np.asarray(l, dtype=complex)
    k = int(np.argmax(np.abs(l)))
    e1 = np.zeros(3, dtype=complex)
    e2 = np.zeros(3, dtype=complex)
    others = [j for j in range(3) if j != k]
    e1[others[0]] = 1
    e2[others[1]] = 1
    return np.cross(l, e1), np.cross(l, e2)


def intersect_line_conic(l, A):
    """The two (complex) intersections of a line with a conic."""
    p, q = _line_points(l)
    A = np.asarray(A, dtype=complex)
    # (mu p + nu q)^T A (mu p + nu q) = a mu^2 + 2 b mu nu + c nu^2
    a = p @ A @ p
    b = p @ A @ q
    c = q @ A @ q
    if a == 0 and c == 0:
        return [normalize(p), normalize(q)]
    disc = np.sqrt(b * b - a * c)
    if abs(a) >= abs(c):
        return [normalize((-b + disc) / a * p + q), normalize((-b - disc) / a * p + q)]
    return [normalize(p + (-b + disc) / c * q), normalize(p + (-b - disc) / c * q)]


def _polish(p, A, B, steps: int = 3):
    """Newton refinement of an intersection point in its affine chart."""
    p = np.asarray(p, dtype=complex)
    k = int(np.argmax(np.abs(p)))
    idx = [j for j in range(3) if j != k]
    for _ in range(steps):
        F = np.array([p @ A @ p, p @ B @ p])
        J = np.array([[2 * (A @ p)[j] for j in idx], [2 * (B @ p)[j] for j in idx]])
        if abs(np.linalg.det(J)) < 1e-8 * (np.abs(J).max() ** 2 + 1e-300):
            break
        step = np.linalg.solve(J, F)
        p = p.copy()
        p[idx] -= step
    return p


@dataclass(frozen=True)
class ConicIntersection:
    """Four intersection points (with repetition) of two conics.

    ``multiplicities[i]`` is the multiplicity of ``points[i]``; repeated
    points appear once per unit of multiplicity.
    """

    points: np.ndarray  # (4, 3) complex
    multiplicities: tuple

    def distinct(self):
        seen, out = [], []
        for p, m in zip(self.points, self.multiplicities):
            if not any(same_point(p, q, 1e-6) for q in seen):
                seen.append(p)
                out.append((p, m))
        return out

    @property
    def is_real(self) -> bool:
        return bool(np.abs(self.points.imag).max() <= 1e-9)


def conic_intersect(A, B) -> ConicIntersection:
    """Intersect two nonsingular conics via a degenerate member of their pencil."""
    A = conic(A).astype(float)
    B = conic(B).astype(float)
    sA, sB = scale(A), scale(B)
    An, Bn = A / sA, B / sB
    sv = np.linalg.svd(np.stack([An.ravel(), Bn.ravel()]), compute_uv=False)
    if sv[1] <= 1e-12 * sv[0]:
        raise ProportionalConics("conics are proportional")
    pr = pencil_roots(An, Bn)
    real = sorted((r.real for r in pr.roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r))),
                  key=abs)
    if not real:
        raise SplitFailure("pencil cubic has no real root")

    def degen(lam):
        # Newton polish on the cubic for simple roots
        c = pencil_cubic(An, Bn)
        for _ in range(3):
            f = np.polyval(c, lam)
            df = np.polyval(np.polyder(c), lam)
            if df == 0 or abs(df) < 1e-8 * np.abs(c).max():
                break
            lam = lam - f / df
        return lam, An + lam * Bn

    # prefer a member whose rank-2 splitting is best conditioned
    best = None
    for lam in real:
        lam, D = degen(lam)
        adj = adjugate(D)
        quality = np.abs(adj).max() / max(np.abs(D).max() ** 2, 1e-300)
        if best is None or quality > best[0]:
            best = (quality, lam, D)
    _, lam, D = best
    if abs(np.linalg.det(D)) > 1e-6 * max(np.abs(D).max() ** 3, 1e-300):
        raise SplitFailure("no numerically degenerate member in the pencil")
    l1, l2 = _split_degenerate(D)
    # A is nonsingular, so lam != 0 and points of D on A also lie on B
    pts = intersect_line_conic(l1, An) + intersect_line_conic(l2, An)
    pts = np.array([normalize(_polish(p, An, Bn)) for p in pts])

    mults = []
    for p in pts:
        mults.append(sum(1 for q in pts if same_point(p, q, ROOT_CLUSTER)))
    return ConicIntersection(pts, tuple(mults))


# --------------------------------------------------------------------------
# SL(3) action


def sl3_transform(M, obj, kind: str = "point") -> np.ndarray:
    """Act with an invertible 3x3 matrix on a point, line or conic."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    d = np.linalg.det(M)
    if abs(d) <= 1e-12 * max(np.abs(M).max(), 1e-300) ** 3:
        raise SingularMatrix("transformation matrix is singular")
    if kind == "point":
        return M @ np.asarray(obj)
    Minv = np.linalg.inv(M)
    if kind == "line":
        return Minv.T @ np.asarray(obj)
    if kind == "conic":
        out = Minv.T @ np.asarray(obj) @ Minv
        return 0.5 * (out + out.T)
    raise ValueError(f"unknown kind {kind!r}; expected 'point', 'line' or 'conic'")


def random_sl3(rng: np.random.Generator, spread: float = 0.5) -> np.ndarray:
    """A random determinant-one matrix near the identity."""
    while True:
        M = np.eye(3) + spread * rng.standard_normal((3, 3))
        d = np.linalg.det(M)
        if abs(d) > 0.1:
            M = M / np.cbrt(d)
            return M
