"""Plain SVG 1.1 drawings of dancing configurations.

Everything is drawn in the affine chart ``z = 1`` inside a square window;
lines are clipped to the window and real conics are traced through their
rational parametrisation from one real point.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import conics, ellipses, flat
from .errors import InvalidParams
from .projective import conic_intersect, cross_join, intersect_line_conic

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class Canvas:
    def __init__(self, half_width: float = 3.0, size: int = 600):
        self.w = float(half_width)
        self.size = size
        self.items: list[str] = []

    def _xy(self, x, y):
        s = self.size / (2 * self.w)
        return (x + self.w) * s, (self.w - y) * s

    def inside(self, x, y, margin: float = 1.5) -> bool:
        return abs(x) <= margin * self.w and abs(y) <= margin * self.w

    def line(self, l, color="#000", label=None):
        """Draw the projective line ``l`` clipped to the window."""
        a, b, c = (float(t) for t in l)
        pts = []
        w = self.w
        if abs(b) > 1e-12:
            for x in (-w, w):
                pts.append((x, -(a * x + c) / b))
        if abs(a) > 1e-12:
            for y in (-w, w):
                pts.append((-(b * y + c) / a, y))
        pts = [p for p in pts if abs(p[0]) <= w + 1e-9 and abs(p[1]) <= w + 1e-9]
        if len(pts) < 2:
            return
        (x1, y1), (x2, y2) = self._xy(*pts[0]), self._xy(*pts[-1])
        self.items.append(f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                          f'stroke="{color}" stroke-width="1.5"/>')
        if label:
            self.text(*pts[0], label, color)

    def polyline(self, pts, color="#000", width=1.5):
        pts = [self._xy(x, y) for x, y in pts]
        if len(pts) < 2:
            return
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def point(self, x, y, color="#000", label=None):
        px, py = self._xy(x, y)
        self.items.append(f'<circle cx="{px:.3f}" cy="{py:.3f}" r="4" fill="{color}"/>')
        if label:
            self.text(x, y, label, color)

    def text(self, x, y, label, color="#000"):
        px, py = self._xy(x, y)
        self.items.append(f'<text x="{px + 6:.3f}" y="{py - 6:.3f}" font-size="13" '
                          f'fill="{color}">{escape(label)}</text>')

    def conic(self, A, color="#000", samples: int = 720):
        for branch in conic_branches(A, self, samples):
            self.polyline(branch, color)

    def svg(self, title: str = "") -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{self.size}" height="{self.size}" viewBox="0 0 {self.size} {self.size}">\n'
                f'<title>{escape(title)}</title>\n'
                f'<rect width="100%" height="100%" fill="white"/>\n')
        return head + "\n".join(self.items) + "\n</svg>\n"


def _real_point(A):
    """Some real point of the conic ``A``, or ``None`` if it has none in the window."""
    for c in np.linspace(-3.0, 3.0, 61):
        for l in ((0.0, 1.0, -c), (1.0, 0.0, -c)):
            for p in intersect_line_conic(np.array(l), A):
                if np.abs(p.imag).max() <= 1e-9 * np.abs(p).max():
                    return p.real
    return None


def conic_branches(A, canvas: Canvas, samples: int = 720):
    """Affine polylines of the real conic ``A`` visible in the canvas."""
    A = np.asarray(A, dtype=float)
    p = _real_point(A)
    if p is None:
        return []
    tangent = A @ p
    d = max((np.cross(tangent, e) for e in np.eye(3)), key=lambda c: np.abs(np.cross(c, p)).max())
    e = np.eye(3)[int(np.argmax(np.abs(tangent)))]
    branches, cur = [], []
    # q = cos(t) d + sin(t) e sweeps every line through p once
    for t in np.linspace(0.0, np.pi, samples):
        q = np.cos(t) * d + np.sin(t) * e
        x = (q @ A @ q) * p - 2 * (p @ A @ q) * q
        if abs(x[2]) < 1e-9 * np.abs(x).max():
            if cur:
                branches.append(cur)
            cur = []
            continue
        xy = (x[0] / x[2], x[1] / x[2])
        if not canvas.inside(*xy):
            if cur:
                branches.append(cur)
            cur = []
            continue
        if cur and np.hypot(xy[0] - cur[-1][0], xy[1] - cur[-1][1]) > canvas.w:
            branches.append(cur)
            cur = []
        cur.append(xy)
    if cur:
        branches.append(cur)
    return branches


def _affine(p):
    p = np.asarray(p)
    if np.iscomplexobj(p):
        p = p.real
    return p[0] / p[2], p[1] / p[2]


# --------------------------------------------------------------------------
# the four plot kinds

FLAT_EXAMPLE = {
    "P": [0.2, 0.5, 1.0],
    "L": [1.0, -0.6, 1.0],
    "Pt": [-0.9, -0.4, 1.0],
    "Lt": [-0.3, 1.0, 1.0],
}


def flat_example():
    """A dancing quadruple: ``P~`` is moved onto the line through ``P`` and ``L ^ L~``."""
    P, L, Lt = (np.array(FLAT_EXAMPLE[k]) for k in ("P", "L", "Lt"))
    line = np.cross(P, np.cross(L, Lt))
    Pt0 = np.array(FLAT_EXAMPLE["Pt"])
    # closest point of the line to Pt0 in the chart
    n = line[:2] / np.linalg.norm(line[:2])
    dist = (line @ Pt0) / np.linalg.norm(line[:2])
    Pt = np.array([Pt0[0] - dist * n[0], Pt0[1] - dist * n[1], 1.0])
    return P, L, Pt, Lt


def plot_dancing_pair(params: dict) -> str:
    if params:
        try:
            P, L, Pt, Lt = (np.asarray(params[k], dtype=float) for k in ("P", "L", "Pt", "Lt"))
        except KeyError as exc:
            raise InvalidParams(f"dancing-pair needs P, L, Pt, Lt (missing {exc})") from None
    else:
        P, L, Pt, Lt = flat_example()
    r = flat.dancing_flat_residual(P, L, Pt, Lt, relative=True)
    X = cross_join(L, Lt)
    cv = Canvas()
    cv.line(L, COLORS[0], "L")
    cv.line(Lt, COLORS[1], "L~")
    cv.line(cross_join(P, Pt), COLORS[2], "PP~")
    for p, lab, col in ((P, "P", COLORS[0]), (Pt, "P~", COLORS[1]), (X, "L^L~", COLORS[2])):
        if abs(p[2]) > 1e-12:
            cv.point(*_affine(p), col, lab)
    return cv.svg(f"dancing pair, residual {r:.3e}")


def plot_alpha_surface(params: dict) -> str:
    l = np.asarray(params.get("l", [0.0, 1.0, 0.0]), dtype=float)
    p = np.asarray(params.get("p", [-1.0, 0.0, 0.0]), dtype=float)
    try:
        chart = flat.AlphaSurfaceChart(l, p)
    except ValueError as exc:
        raise InvalidParams(str(exc)) from None
    cv = Canvas()
    cv.line(chart.l, "#000", "l")
    if abs(chart.p[2]) > 1e-12:
        cv.point(*_affine(chart.p), "#000", "p")
    for k, (s, t) in enumerate(((0.5, -1.0), (1.5, 0.5), (-1.0, 2.0))):
        P, L = flat.alpha_surface_point(chart, s, t)
        col = COLORS[k % len(COLORS)]
        cv.line(L, col)
        if abs(P[2]) > 1e-12:
            cv.point(*_affine(P), col, f"P{k}")
    return cv.svg("alpha-surface: points on l, lines through p")


def _ellipse_polyline(z: ellipses.EllipseZ, n: int = 361):
    # Q = L L^T with L the Cholesky factor; x = L^-T (cos, sin)
    Lc = np.linalg.cholesky(z.form)
    t = np.linspace(0.0, 2 * np.pi, n)
    pts = np.linalg.solve(Lc.T, np.vstack([np.cos(t), np.sin(t)]))
    return list(zip(pts[0], pts[1]))


def plot_ellipse_dance(params: dict) -> str:
    b = float(params.get("b", 2.0))
    if not b > 0 or abs(b - 1.0) < 1e-6:
        raise InvalidParams("b must be positive and different from 1")
    xd, yd = 1.0, 1.0
    roots = [r.real for r in ellipses.first_quadratic_roots(b, xd, yd) if abs(r.imag) < 1e-12]
    if not roots:
        raise InvalidParams(f"no real common root at b = {b}")
    P0 = max(roots)
    ad = ellipses.null_tangent_on_section(b, xd, yd, P0, 1.0)
    eps = float(params.get("eps", 0.3))
    z0 = ellipses.EllipseZ(0.0, b)
    z1 = ellipses.EllipseZ(eps * ad, b + eps)
    u0, u1 = (1.0, 0.0), (1.0 + eps * xd, eps * yd)
    cv = Canvas()
    cv.polyline(_ellipse_polyline(z0), COLORS[0])
    cv.polyline(_ellipse_polyline(z1), COLORS[1])
    cv.point(*u0, COLORS[0], "u")
    cv.point(*u1, COLORS[1], "u~")
    # the turning points: where the two ellipses meet
    A = np.block([[z0.form, np.zeros((2, 1))], [np.zeros((1, 2)), -np.ones((1, 1))]])
    B = np.block([[z1.form, np.zeros((2, 1))], [np.zeros((1, 2)), -np.ones((1, 1))]])
    for p in conic_intersect(A, B).points:
        if np.abs(p.imag).max() <= 1e-9 and abs(p[2].real) > 1e-12:
            cv.point(*_affine(p), COLORS[2])
    traj = params.get("trajectory")
    if traj is not None:
        cv.polyline([(x, y) for x, y, _ in traj], COLORS[3], width=2.5)
    return cv.svg(f"ellipse dance at b = {b}, null tangent adot = {ad:.4f}")


CONIC_EXAMPLE = {
    "A": np.diag([1.0, 1.0, -1.0]),
    "B": np.diag([0.25, 4.0, -1.0]),
    "a": np.array([0.5, 0.8, 1.0]),
    "d": np.array([1.0, -0.4, 0.0]),
}


def conic_example():
    """Unit circle and an ellipse (four real common points) with a dancing pair of points."""
    A, B, a, d = (CONIC_EXAMPLE[k] for k in ("A", "B", "a", "d"))
    C = conics.pencil_conic(a, A, B)
    s = -2 * (a @ C @ d) / (d @ C @ d)
    return a, A, a + s * d, B


def plot_conic_dance(params: dict) -> str:
    if params:
        try:
            a, A, b, B = (np.asarray(params[k], dtype=float) for k in ("a", "A", "b", "B"))
        except KeyError as exc:
            raise InvalidParams(f"conic-dance needs a, A, b, B (missing {exc})") from None
    else:
        a, A, b, B = conic_example()
    C = conics.pencil_conic(a, A, B)
    r = conics.dancing_conics_residual(a, A, b, B, relative=True)
    cv = Canvas()
    for M, col in ((A, COLORS[0]), (B, COLORS[1]), (C, COLORS[2])):
        cv.conic(M, col)
    cv.point(*_affine(a), "#000", "a")
    cv.point(*_affine(b), "#000", "b")
    for p in conic_intersect(A, B).points:
        if np.abs(p.imag).max() <= 1e-9 and abs(p[2].real) > 1e-12:
            cv.point(*_affine(p), COLORS[3])
    return cv.svg(f"dancing conics, residual {r:.3e}")


PLOTS = {
    "dancing-pair": plot_dancing_pair,
    "alpha-surface": plot_alpha_surface,
    "ellipse-dance": plot_ellipse_dance,
    "conic-dance": plot_conic_dance,
}


def plot(kind: str, params: dict, out_path) -> Path:
    if kind not in PLOTS:
        raise InvalidParams(f"unknown plot kind {kind!r}; choose from {', '.join(PLOTS)}")
    svg = PLOTS[kind](params)
    out = Path(out_path)
    out.write_text(svg)
    return out
