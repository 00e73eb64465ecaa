"""
Planar and spatial primitives: quadrilaterals, supporting planes, base lines,
convex clipping IoU and the minimum-area rotated rectangle.

Coordinates are image coordinates (x to the right, y downward). A ``Quad`` is
stored with positive shoelace area, i.e. the usual ICDAR order
top-left, top-right, bottom-right, bottom-left for an upright box, starting
from the vertex with minimal (y, x).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    DegeneratePlane,
    DegenerateQuad,
    HorizontalPlane,
    NonConvexInput,
    ParallelLines,
    SingularDecomposition,
)

SINGULAR_EPS = 1e-12
COINCIDENT_EPS = 1e-9


def signed_area(poly) -> float:
    """Shoelace area, positive for the canonical vertex order."""
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_cross(p1, p2, p3, p4, tol) -> bool:
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    return ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    )


class Box(NamedTuple):
    """Axis-aligned rectangle ``(x0, y0, x1, y1)`` in image coordinates."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def validate(self) -> "Box":
        if not (np.all(np.isfinite(self)) and self.width > 0 and self.height > 0):
            raise DegenerateInput(f"box must have positive width and height: {tuple(self)}")
        return self

    def corners(self) -> np.ndarray:
        return np.array(
            [[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]],
            dtype=float,
        )

    @classmethod
    def around(cls, points, margin: float = 0.0) -> "Box":
        """Bounding box of ``points`` grown by ``margin`` times its size on every side."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = p.min(axis=0), p.max(axis=0)
        pad = (hi - lo) * margin
        return cls(*(float(v) for v in (*(lo - pad), *(hi + pad))))

    @classmethod
    def parse(cls, value) -> "Box":
        if isinstance(value, str):
            value = [float(t) for t in value.replace(" ", "").split(",")]
        if len(value) != 4:
            raise ValueError(f"box needs 4 numbers, got {value!r}")
        return cls(*(float(v) for v in value)).validate()


class Quad:
    """Validated quadrilateral with a canonical vertex order.

    The vertex order is normalized on construction (reversed if the signed
    area is negative, rotated so the vertex with minimal ``(y, x)`` comes
    first). Construction fails with ``DegenerateQuad`` unless the quad is
    simple, has non-zero area and is star-shaped about its vertex centroid.
    """

    __slots__ = ("_v",)

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float).reshape(4, 2)
        if not np.all(np.isfinite(v)):
            raise DegenerateQuad("quad has non-finite coordinates")
        scale = max(float(np.ptp(v)), 1.0)
        tol = SINGULAR_EPS * scale * scale
        area = signed_area(v)
        if abs(area) <= tol:
            raise DegenerateQuad("quad has zero area")
        if area < 0:
            v = v[::-1]
        start = int(np.lexsort((v[:, 0], v[:, 1]))[0])
        v = np.roll(v, -start, axis=0)
        if _segments_cross(v[0], v[1], v[2], v[3], tol) or _segments_cross(v[1], v[2], v[3], v[0], tol):
            raise DegenerateQuad("quad is self-intersecting")
        o = v.mean(axis=0)
        for i in range(4):
            if _cross(v[i], v[(i + 1) % 4], o) <= tol:
                raise DegenerateQuad("quad is not star-shaped about its center")
        v.setflags(write=False)
        self._v = v

    @classmethod
    def from_flat(cls, coords: Sequence[float]) -> "Quad":
        if len(coords) != 8:
            raise ValueError(f"quad needs 8 coordinates, got {len(coords)}")
        return cls(np.asarray(coords, dtype=float).reshape(4, 2))

    @property
    def vertices(self) -> np.ndarray:
        return self._v

    @property
    def center(self) -> np.ndarray:
        return self._v.mean(axis=0)

    @property
    def area(self) -> float:
        return signed_area(self._v)

    def flat(self) -> list[float]:
        return [float(c) for c in self._v.ravel()]

    def bounds(self) -> Box:
        return Box.around(self._v)

    def is_convex(self) -> bool:
        v = self._v
        tol = SINGULAR_EPS * max(float(np.ptp(v)), 1.0) ** 2
        return all(_cross(v[i], v[(i + 1) % 4], v[(i + 2) % 4]) >= -tol for i in range(4))

    def translated(self, dx: float, dy: float) -> "Quad":
        return Quad(self._v + [dx, dy])

    def __eq__(self, other):
        return isinstance(other, Quad) and np.array_equal(self._v, other._v)

    def __hash__(self):
        return hash(self._v.tobytes())

    def __repr__(self):
        pts = ", ".join(f"({x:g}, {y:g})" for x, y in self._v)
        return f"Quad({pts})"


def quad_center(q: Quad) -> np.ndarray:
    """Arithmetic mean of the four vertices."""
    return q.vertices.mean(axis=0)


def decompose(o, m, n, p) -> tuple[float, float]:
    """Solve ``OP = alpha * OM + beta * ON`` for ``(alpha, beta)``.

    Raises ``SingularDecomposition`` when OM and ON are (nearly) parallel,
    judged on the determinant normalized by ``|OM| |ON|``, or when the
    coefficients overflow (rays of subnormal length).
    """
    ox, oy = float(o[0]), float(o[1])
    mx, my = float(m[0]) - ox, float(m[1]) - oy
    nx, ny = float(n[0]) - ox, float(n[1]) - oy
    px, py = float(p[0]) - ox, float(p[1]) - oy
    det = mx * ny - nx * my
    norm = np.hypot(mx, my) * np.hypot(nx, ny)
    if norm == 0.0 or abs(det) <= SINGULAR_EPS * norm:
        raise SingularDecomposition("rays OM and ON are collinear")
    alpha = (px * ny - nx * py) / det
    beta = (mx * py - px * my) / det
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        raise SingularDecomposition("decomposition overflows")
    return alpha, beta


@dataclass(frozen=True)
class Plane:
    """Plane ``a*x + b*y + z + d = 0``."""

    a: float
    b: float
    d: float

    def __post_init__(self):
        if not all(np.isfinite((self.a, self.b, self.d))):
            raise DegeneratePlane("plane coefficients must be finite")

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.a, self.b, self.d])

    def z_at(self, x, y):
        return -(self.a * np.asarray(x) + self.b * np.asarray(y) + self.d)

    def signed_residual(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        return self.a * p[:, 0] + self.b * p[:, 1] + p[:, 2] + self.d

    def distance(self, points) -> np.ndarray:
        """Perpendicular distance of each 3D point to the plane."""
        return np.abs(self.signed_residual(points)) / np.sqrt(self.a**2 + self.b**2 + 1.0)


def plane_through(p1, p2, p3) -> Plane:
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    e1, e2 = p2 - p1, p3 - p1
    nrm = np.cross(e1, e2)
    size = np.linalg.norm(nrm)
    if size <= SINGULAR_EPS * np.linalg.norm(e1) * np.linalg.norm(e2) or size == 0.0:
        raise DegeneratePlane("points are collinear")
    if abs(nrm[2]) <= SINGULAR_EPS * size:
        raise DegeneratePlane("plane is vertical")
    a, b = nrm[0] / nrm[2], nrm[1] / nrm[2]
    d = -(a * p1[0] + b * p1[1] + p1[2])
    return Plane(float(a), float(b), float(d))


@dataclass(frozen=True)
class Line2:
    """Line ``p*x + q*y + r = 0`` with unit normal ``(p, q)``."""

    p: float
    q: float
    r: float

    def __post_init__(self):
        n = float(np.hypot(self.p, self.q))
        if not np.isfinite(n) or n <= SINGULAR_EPS:
            raise ValueError("line normal must be non-zero")
        object.__setattr__(self, "p", float(self.p) / n)
        object.__setattr__(self, "q", float(self.q) / n)
        object.__setattr__(self, "r", float(self.r) / n)

    def signed_distance(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return self.p * pts[:, 0] + self.q * pts[:, 1] + self.r


def plane_base_intersection(pl: Plane) -> Line2:
    """Trace of the plane on ``z = 0``."""
    if np.hypot(pl.a, pl.b) <= SINGULAR_EPS:
        raise HorizontalPlane("plane is parallel to z=0")
    return Line2(pl.a, pl.b, pl.d)


def line_intersection(l1: Line2, l2: Line2) -> np.ndarray:
    den = l1.p * l2.q - l2.p * l1.q
    if abs(den) <= COINCIDENT_EPS:
        raise ParallelLines("lines are parallel")
    x = (l1.q * l2.r - l2.q * l1.r) / den
    y = (l1.r * l2.p - l2.r * l1.p) / den
    return np.array([x, y])


def _clip(subject: list, clipper: np.ndarray) -> list:
    # Sutherland-Hodgman against a positively oriented convex clipper.
    out = subject
    for i in range(len(clipper)):
        if not out:
            break
        a, b = clipper[i], clipper[(i + 1) % len(clipper)]
        src, out = out, []
        for j in range(len(src)):
            cur, prev = src[j], src[j - 1]
            cin = _cross(a, b, cur) >= 0.0
            pin = _cross(a, b, prev) >= 0.0
            if cin != pin:
                dp = (prev[0] - cur[0], prev[1] - cur[1])
                ea = _cross(a, b, cur)
                eb = _cross(a, b, prev)
                t = ea / (ea - eb)
                out.append((cur[0] + t * dp[0], cur[1] + t * dp[1]))
            if cin:
                out.append(cur)
    return out


def convex_intersection_area(q1: Quad, q2: Quad) -> float:
    poly = _clip([tuple(v) for v in q1.vertices], q2.vertices)
    if len(poly) < 3:
        return 0.0
    return max(signed_area(poly), 0.0)


def polygon_iou(q1: Quad, q2: Quad) -> float:
    """Intersection over union of two convex quads."""
    if not (q1.is_convex() and q2.is_convex()):
        raise NonConvexInput("polygon_iou requires convex quads")
    # fixed argument order makes the result exactly symmetric
    if tuple(q2.flat()) < tuple(q1.flat()):
        q1, q2 = q2, q1
    inter = convex_intersection_area(q1, q2)
    union = q1.area + q2.area - inter
    if union <= 0.0:
        return 0.0
    return float(min(max(inter / union, 0.0), 1.0))


def convex_hull(points: Iterable) -> np.ndarray:
    """Andrew's monotone chain; positively oriented, collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return pts
    pts = [tuple(p) for p in pts]
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def min_area_rect(points) -> Quad:
    """Minimum-area enclosing rotated rectangle.

    One side of the optimal rectangle is collinear with a hull edge, so every
    hull edge direction is tried as a caliper orientation and the smallest
    area kept (first one on ties).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise DegenerateInput("need at least 3 points")
    hull = convex_hull(pts)
    scale = max(float(np.ptp(pts)), 1.0)
    if len(hull) < 3 or abs(signed_area(hull)) <= SINGULAR_EPS * scale * scale:
        raise DegenerateInput("points are collinear")
    edges = np.roll(hull, -1, axis=0) - hull
    u = edges / np.linalg.norm(edges, axis=1, keepdims=True)
    w = np.stack([-u[:, 1], u[:, 0]], axis=1)
    pu = u @ hull.T
    pw = w @ hull.T
    areas = np.ptp(pu, axis=1) * np.ptp(pw, axis=1)
    k = int(np.argmin(areas))
    u0, u1 = pu[k].min(), pu[k].max()
    w0, w1 = pw[k].min(), pw[k].max()
    uk, wk = u[k], w[k]
    corners = [uk * u0 + wk * w0, uk * u1 + wk * w0, uk * u1 + wk * w1, uk * u0 + wk * w1]
    return Quad(corners)
