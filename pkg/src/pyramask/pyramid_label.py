"""
Soft pyramid labels.

A quad is split into four triangular sectors around its vertex centroid O.
Inside the sector between rays OM and ON a point P is written as
``OP = alpha*OM + beta*ON`` with non-negative coefficients and gets the
height ``max(1 - (alpha + beta), 0)``: 1 at O, 0 on the quad boundary and
linear along every spoke from O.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateQuad, DimensionMismatch, SingularDecomposition
from .geometry import Box, Quad, decompose

REGION_NAMES = ("OAB", "OBC", "OCD", "ODA")
# a point counts as inside a sector when min(alpha, beta) >= -REGION_TOL
REGION_TOL = 1e-12
DEFAULT_MASK_SIZE = 28


@dataclass(frozen=True, eq=False)
class SoftMask:
    """Score grid of shape ``(height, width)`` spanning ``box`` in image coordinates.

    Cell ``(row j, col i)`` stands for the point at its center,
    ``x0 + (i + 0.5) * box.width / width`` and likewise for y.
    """

    scores: np.ndarray
    box: Box

    def __post_init__(self):
        s = np.array(self.scores, dtype=float)
        if s.ndim != 2 or s.shape[0] < 2 or s.shape[1] < 2:
            raise ValueError(f"mask must be 2D with both dims >= 2, got shape {s.shape}")
        if not np.all(np.isfinite(s)) or s.min() < 0.0 or s.max() > 1.0:
            raise ValueError("mask scores must lie in [0, 1]")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "box", Box(*(float(v) for v in self.box)).validate())

    @classmethod
    def clamped(cls, scores, box) -> "SoftMask":
        """Build a mask from raw (possibly noisy) scores, clamping to [0, 1]."""
        s = np.nan_to_num(np.asarray(scores, dtype=float), nan=0.0)
        return cls(np.clip(s, 0.0, 1.0), box)

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Image x of every column center and image y of every row center."""
        return cell_centers(self.box, self.width, self.height)

    def __eq__(self, other):
        return (
            isinstance(other, SoftMask)
            and tuple(self.box) == tuple(other.box)
            and np.array_equal(self.scores, other.scores)
        )


def cell_centers(box: Box, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    xs = box.x0 + (np.arange(width) + 0.5) * (box.width / width)
    ys = box.y0 + (np.arange(height) + 0.5) * (box.height / height)
    return xs, ys


class PyramidRegion(NamedTuple):
    name: str
    m: np.ndarray
    n: np.ndarray


def _regions(q: Quad) -> list[PyramidRegion]:
    v = q.vertices
    return [PyramidRegion(REGION_NAMES[i], v[i], v[(i + 1) % 4]) for i in range(4)]


def select_region(q: Quad, p) -> tuple[PyramidRegion, float, float]:
    """First sector (in OAB, OBC, OCD, ODA order) with alpha, beta >= 0.

    Points on a shared ray satisfy two sectors; the earlier one wins. Both
    give the same alpha + beta. A point outside every sector (impossible for
    a valid quad) yields the sector with the largest ``min(alpha, beta)``.
    """
    o = q.center
    best = None
    for region in _regions(q):
        try:
            alpha, beta = decompose(o, region.m, region.n, p)
        except SingularDecomposition as exc:
            raise DegenerateQuad("center is collinear with two adjacent vertices") from exc
        if min(alpha, beta) >= -REGION_TOL:
            return region, alpha, beta
        if best is None or min(alpha, beta) > min(best[1], best[2]):
            best = (region, alpha, beta)
    return best


def pyramid_score(q: Quad, p) -> float:
    _, alpha, beta = select_region(q, p)
    if min(alpha, beta) < -REGION_TOL:
        return 0.0
    return max(1.0 - (alpha + beta), 0.0)


def pyramid_scores(q: Quad, x, y) -> np.ndarray:
    """Vectorized ``pyramid_score`` over broadcastable coordinate arrays."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    o = q.center
    px, py = x - o[0], y - o[1]
    out = np.zeros(x.shape)
    todo = np.ones(x.shape, dtype=bool)
    for region in _regions(q):
        mx, my = region.m - o
        nx, ny = region.n - o
        det = mx * ny - nx * my
        if abs(det) <= 1e-12 * np.hypot(mx, my) * np.hypot(nx, ny):
            raise DegenerateQuad("center is collinear with two adjacent vertices")
        alpha = (px * ny - nx * py) / det
        beta = (mx * py - px * my) / det
        hit = todo & (np.minimum(alpha, beta) >= -REGION_TOL)
        out[hit] = np.maximum(1.0 - (alpha[hit] + beta[hit]), 0.0)
        todo &= ~hit
    return out


def rasterize_label(q: Quad, mask_width: int = DEFAULT_MASK_SIZE,
                    mask_height: int = DEFAULT_MASK_SIZE, box=None) -> SoftMask:
    """Soft pyramid label of ``q`` sampled at the cell centers of a grid over ``box``.

    ``box`` defaults to the bounding box of the quad.
    """
    box = (q.bounds() if box is None else Box(*box)).validate()
    xs, ys = cell_centers(box, mask_width, mask_height)
    scores = pyramid_scores(q, xs[None, :], ys[:, None])
    return SoftMask(np.clip(scores, 0.0, 1.0), box)


def rasterize_hard_label(q: Quad, mask_width: int = DEFAULT_MASK_SIZE,
                         mask_height: int = DEFAULT_MASK_SIZE, box=None) -> SoftMask:
    """Binary text label: 1 for cell centers strictly inside ``q``, else 0."""
    soft = rasterize_label(q, mask_width, mask_height, box)
    return SoftMask((soft.scores > 0.0).astype(float), soft.box)


def l1_mask_distance(m1: SoftMask, m2: SoftMask) -> float:
    if m1.scores.shape != m2.scores.shape:
        raise DimensionMismatch(f"{m1.scores.shape} vs {m2.scores.shape}")
    return float(np.mean(np.abs(m1.scores - m2.scores)))
