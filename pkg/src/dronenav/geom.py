"""Small exact-geometry kernel shared by all mission modules.

Vectors are plain numpy float arrays (2 or 3 components). Everything here is
a pure function over immutable inputs: polygons and circles are frozen
dataclasses, so results can be cached and shared across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EPS = 1e-9


class DegenerateGeometryError(ValueError):
    """Raised when an input collapses the construction (collinear hulls, zero vectors)."""


def vec(*components: float) -> np.ndarray:
    return np.asarray(components, dtype=float)


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize; the zero vector maps to itself."""
    n = norm(v)
    if n < EPS:
        return np.zeros_like(np.asarray(v, dtype=float))
    return np.asarray(v, dtype=float) / n


def ortho_toward(mu1: np.ndarray, mu2: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to ``mu1``, in span{mu1, mu2}, leaning toward ``mu2``.

    Returns the zero vector when the inputs are collinear. ``mu1`` must be a
    unit vector, ``mu2`` must be nonzero.
    """
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    if norm(mu2) < EPS:
        raise ValueError("direction argument must be nonzero")
    if abs(norm(mu1) - 1.0) > 1e-6:
        raise ValueError("axis argument must be a unit vector")
    w = mu2 - float(np.dot(mu1, mu2)) * mu1
    n = norm(w)
    if n < EPS:
        return np.zeros_like(mu1)
    return w / n


def sign_gate(mu1: np.ndarray, mu2: np.ndarray) -> float:
    """+1 when the vectors share a direction (positive dot), else -1."""
    return 1.0 if float(np.dot(mu1, mu2)) > 0.0 else -1.0


def rotate90(v: np.ndarray, clockwise: bool) -> np.ndarray:
    """Quarter-turn of a 2D vector about the z-axis."""
    x, y = float(v[0]), float(v[1])
    if clockwise:
        return np.array([y, -x])
    return np.array([-y, x])


@dataclass(frozen=True)
class Circle2:
    center: np.ndarray
    radius: float

    def contains(self, p: np.ndarray, tol: float = EPS) -> bool:
        return norm(np.asarray(p, dtype=float) - self.center) <= self.radius + tol


@dataclass(frozen=True)
class ConvexHull2:
    """Strictly convex polygon, vertices counterclockwise."""

    vertices: np.ndarray  # (n, 2)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        """(n, 2, 2) array of [start, end] per edge, CCW."""
        v = self.vertices
        return np.stack([v, np.roll(v, -1, axis=0)], axis=1)

    def perimeter(self) -> float:
        v = self.vertices
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    def contains(self, p: np.ndarray, tol: float = EPS) -> bool:
        """Point inside or on the boundary (CCW half-plane test)."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        w = np.asarray(p, dtype=float) - v
        cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
        return bool(np.all(cross >= -tol * (1.0 + np.abs(cross).max(initial=0.0))))


@dataclass(frozen=True)
class ExtendedHull2(ConvexHull2):
    """Outward offset of a convex hull at fixed standoff, miter-joined."""

    offset: float = 0.0
    source: ConvexHull2 = field(default=None, repr=False)  # type: ignore[assignment]


def _cross2(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def convex_hull(points: np.ndarray) -> ConvexHull2:
    """Minimal strictly convex CCW polygon containing ``points``.

    Monotone chain with collinear vertices dropped; raises
    DegenerateGeometryError when fewer than three extreme points remain.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise DegenerateGeometryError("need at least 3 planar points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    p = pts[order]
    # dedupe identical points to keep the chain strict
    keep = np.ones(len(p), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(p, axis=0)) > EPS, axis=1)
    p = p[keep]
    if len(p) < 3:
        raise DegenerateGeometryError("all points coincide")

    def chain(seq):
        out: list[np.ndarray] = []
        for q in seq:
            while len(out) >= 2 and _cross2(out[-2], out[-1], q) <= EPS:
                out.pop()
            out.append(q)
        return out

    lower = chain(p)
    upper = chain(p[::-1])
    verts = lower[:-1] + upper[:-1]
    if len(verts) < 3:
        raise DegenerateGeometryError("points are collinear")
    return ConvexHull2(np.array(verts))


def extended_hull(hull: ConvexHull2, d_s: float) -> ExtendedHull2:
    """Offset every hull edge outward by ``d_s``; vertices are miter intersections.

    Edge count and order match the source hull one-to-one.
    """
    if d_s <= 0:
        raise ValueError("standoff must be positive")
    v = hull.vertices
    nv = len(v)
    e = np.roll(v, -1, axis=0) - v
    # outward normal of a CCW edge is the clockwise quarter-turn of its direction
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    a = v + d_s * normals            # offset line anchors
    out = np.empty_like(v)
    for i in range(nv):
        j = (i - 1) % nv             # vertex i is the meet of offset edges j and i
        out[i] = _line_intersection(a[j], e[j], a[i], e[i])
    return ExtendedHull2(vertices=out, offset=float(d_s), source=hull)


def _line_intersection(p1: np.ndarray, d1: np.ndarray, p2: np.ndarray, d2: np.ndarray) -> np.ndarray:
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < EPS * max(1.0, norm(d1) * norm(d2)):
        raise DegenerateGeometryError("parallel offset lines")
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / denom
    return p1 + t * d1


def _circle_two(a, b) -> Circle2:
    c = (a + b) / 2.0
    return Circle2(c, norm(a - c))


def _circumcircle(a, b, c):
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if abs(d) < 1e-14:
        return None
    ax2, bx2, cx2 = a @ a, b @ b, c @ c
    ux = (ax2 * (b[1] - c[1]) + bx2 * (c[1] - a[1]) + cx2 * (a[1] - b[1])) / d
    uy = (ax2 * (c[0] - b[0]) + bx2 * (a[0] - c[0]) + cx2 * (b[0] - a[0])) / d
    center = np.array([ux, uy])
    return Circle2(center, max(norm(a - center), norm(b - center), norm(c - center)))


def min_enclosing_circle(points: np.ndarray, rng: np.random.Generator | None = None) -> Circle2:
    """Smallest circle containing all points (randomized incremental, expected O(n))."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if len(pts) == 0:
        raise ValueError("need at least one point")
    if len(pts) == 1:
        return Circle2(pts[0].copy(), 0.0)
    shuffled = pts.copy()
    (rng or np.random.default_rng(0)).shuffle(shuffled)
    c = _circle_two(shuffled[0], shuffled[1])
    for i in range(2, len(shuffled)):
        p = shuffled[i]
        if c.contains(p):
            continue
        # p is on the boundary of the circle of shuffled[:i+1]
        c = _circle_two(shuffled[0], p)
        for j in range(1, i):
            q = shuffled[j]
            if c.contains(q):
                continue
            c = _circle_two(p, q)
            for k in range(j):
                r = shuffled[k]
                if c.contains(r):
                    continue
                cc = _circumcircle(p, q, r)
                if cc is not None:
                    c = cc
    return c


# -- polygon boundary parameterization (arclength coordinates) --------------

def closest_point_on_segment(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom < EPS:
        return a.copy()
    t = float((p - a) @ ab) / denom
    return a + min(max(t, 0.0), 1.0) * ab


def boundary_project(vertices: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, int, float]:
    """Closest boundary point of a polygon: (point, edge index, distance)."""
    p = np.asarray(p, dtype=float)
    best, best_i, best_d = None, -1, math.inf
    nv = len(vertices)
    for i in range(nv):
        cp = closest_point_on_segment(vertices[i], vertices[(i + 1) % nv], p)
        d = norm(p - cp)
        if d < best_d:
            best, best_i, best_d = cp, i, d
    return best, best_i, best_d


def cumulative_edge_lengths(vertices: np.ndarray) -> np.ndarray:
    """Arclength at each vertex, plus the total perimeter as the last entry."""
    d = np.linalg.norm(np.roll(vertices, -1, axis=0) - vertices, axis=1)
    return np.concatenate([[0.0], np.cumsum(d)])


def arclength_of(vertices: np.ndarray, point: np.ndarray, edge: int) -> float:
    """Arclength coordinate of a boundary point known to lie on ``edge``."""
    cum = cumulative_edge_lengths(vertices)
    return float(cum[edge] + norm(np.asarray(point, dtype=float) - vertices[edge]))


def point_at_arclength(vertices: np.ndarray, s: float) -> tuple[np.ndarray, int]:
    """Boundary point at arclength ``s`` (mod perimeter): (point, edge index)."""
    cum = cumulative_edge_lengths(vertices)
    M = cum[-1]
    s = s % M
    edge = int(np.searchsorted(cum, s, side="right") - 1)
    edge = min(edge, len(vertices) - 1)
    a = vertices[edge]
    b = vertices[(edge + 1) % len(vertices)]
    seg = cum[edge + 1] - cum[edge]
    t = 0.0 if seg < EPS else (s - cum[edge]) / seg
    return a + t * (b - a), edge
