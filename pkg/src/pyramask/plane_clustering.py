"""
Recover a text quad from a soft pyramid mask by plane clustering.

Every cell above the positive threshold becomes a 3D point (x, y, score).
Four supporting planes are initialized from an apex over the positive
centroid (z = 1) and the corners of the detection box, then refined by
alternating nearest-plane assignment with a robust (Tukey bisquare IRLS)
refit of each plane. The output quad is bounded by the traces of the four
planes on z = 0, so it can extend past the box the mask was cropped to.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, DegeneratePlane, DegenerateQuad, EmptyMask, HorizontalPlane, ParallelLines
from .geometry import Box, Line2, Plane, Quad, line_intersection, plane_base_intersection, plane_through
from .pyramid_label import SoftMask

log = logging.getLogger(__name__)

MAD_TO_SIGMA = 1.4826
# lower bound on the IRLS residual scale; exact fits would otherwise divide by ~0
SCALE_FLOOR = 1e-9
COEF_TOL = 1e-10
MIN_CORNER_ANGLE = np.deg2rad(0.5)


@dataclass(frozen=True)
class ClusteringConfig:
    positive_threshold: float = 0.1
    max_iter: int = 10
    residual_threshold: float = 1e-4
    irls_iterations: int = 20
    irls_tuning_constant: float = 4.685

    def __post_init__(self):
        if not 0.0 < self.positive_threshold < 1.0:
            raise ValueError("positive_threshold must be in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.residual_threshold <= 0.0:
            raise ValueError("residual_threshold must be > 0")
        if self.irls_iterations < 0:
            raise ValueError("irls_iterations must be >= 0")
        if self.irls_tuning_constant <= 0.0:
            raise ValueError("irls_tuning_constant must be > 0")


@dataclass
class PyramidFit:
    planes: tuple  # four Plane, edge AB, BC, CD, DA of the initializing box
    apex: np.ndarray
    iterations_run: int
    final_residual: float
    cluster_sizes: tuple
    residual_history: list = field(default_factory=list)


@dataclass
class DecodeResult:
    quad: Quad
    fit: PyramidFit
    positive_count: int


def select_positive(mask: SoftMask, cfg: ClusteringConfig = ClusteringConfig()) -> np.ndarray:
    """``(N, 3)`` array of (x, y, score) for cells scoring above the threshold, row-major."""
    xs, ys = mask.cell_centers()
    rows, cols = np.nonzero(mask.scores > cfg.positive_threshold)
    if rows.size == 0:
        raise EmptyMask(f"no cell above {cfg.positive_threshold}")
    return np.column_stack([xs[cols], ys[rows], mask.scores[rows, cols]])


def _squared_distances(points: np.ndarray, planes) -> np.ndarray:
    coef = np.array([[p.a, p.b, p.d] for p in planes])
    num = points[:, :1] * coef[:, 0] + points[:, 1:2] * coef[:, 1] + points[:, 2:3] + coef[:, 2]
    return num**2 / (coef[:, 0] ** 2 + coef[:, 1] ** 2 + 1.0)


def assign_planes(points: np.ndarray, planes) -> np.ndarray:
    """Index of the nearest plane (perpendicular distance) per point; lowest index on ties."""
    return np.argmin(_squared_distances(np.asarray(points, dtype=float).reshape(-1, 3), planes), axis=1)


def nearest_plane(p, planes) -> int:
    return int(assign_planes(np.asarray(p, dtype=float).reshape(1, 3), planes)[0])


def init_planes(positives, bbox, apex=None) -> PyramidFit:
    """Initial pyramid: apex over the positive centroid at height 1, base on the box corners.

    ``apex`` overrides the computed apex (x, y); its height is always 1.
    """
    pts = np.asarray(positives, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyMask("no positive points")
    box = Box(*bbox).validate()
    xy = pts[:, :2].mean(axis=0) if apex is None else np.asarray(apex, dtype=float)[:2]
    top = np.array([xy[0], xy[1], 1.0])
    corners = np.column_stack([box.corners(), np.zeros(4)])
    planes = tuple(plane_through(top, corners[i], corners[(i + 1) % 4]) for i in range(4))
    labels = assign_planes(pts, planes)
    sq = _squared_distances(pts, planes)[np.arange(len(pts)), labels]
    sizes = tuple(int(np.sum(labels == i)) for i in range(4))
    return PyramidFit(planes, top, 0, float(sq.mean()), sizes)


def _plane_from_coef(coef, center) -> Plane:
    # z = c0*(x - mx) + c1*(y - my) + c2
    c0, c1, c2 = coef
    mx, my = center
    return Plane(float(-c0), float(-c1), float(c0 * mx + c1 * my - c2))


def _xy_degenerate(xy: np.ndarray) -> bool:
    if len(xy) < 3:
        return True
    centered = xy - xy.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return sv[0] == 0.0 or sv[1] <= 1e-9 * sv[0]


def mean_squared_distance(points, plane: Plane) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return 0.0
    return float(np.mean(plane.distance(pts) ** 2))


def fit_plane_robust(points, cfg: ClusteringConfig = ClusteringConfig(),
                     fallback: Plane | None = None) -> tuple[Plane, float]:
    """Tukey-bisquare IRLS fit of ``z = -a*x - b*y - d``.

    Starts from ordinary least squares; each pass rescales residuals by
    1.4826 * median(|r|) and reweights with ``(1 - (r/(c*s))**2)**2`` inside
    ``c*s``, zero outside. Sets with fewer than 3 points or collinear (x, y)
    return ``fallback`` untouched. The residual is the mean squared
    perpendicular distance of all points to the returned plane.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if _xy_degenerate(pts[:, :2]):
        if fallback is None:
            raise DegenerateInput("need 3 non-collinear points and no fallback given")
        return fallback, mean_squared_distance(pts, fallback)

    center = pts[:, :2].mean(axis=0)
    X = np.column_stack([pts[:, :2] - center, np.ones(len(pts))])
    z = pts[:, 2]
    coef = np.linalg.lstsq(X, z, rcond=None)[0]
    c = cfg.irls_tuning_constant
    for _ in range(cfg.irls_iterations):
        r = z - X @ coef
        s = max(MAD_TO_SIGMA * float(np.median(np.abs(r))), SCALE_FLOOR)
        u = r / (c * s)
        w = np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 2, 0.0)
        keep = w > 0.0
        if _xy_degenerate(X[keep, :2]):
            break
        sw = np.sqrt(w)
        new = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)[0]
        delta = float(np.max(np.abs(new - coef)))
        coef = new
        if delta < COEF_TOL:
            break
    plane = _plane_from_coef(coef, center)
    return plane, mean_squared_distance(pts, plane)


def _apex_of(planes, fallback: np.ndarray) -> np.ndarray:
    A = np.array([[p.a, p.b, 1.0] for p in planes])
    rhs = -np.array([p.d for p in planes])
    sol, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    return sol if rank == 3 else fallback


def cluster_planes(positives, bbox, cfg: ClusteringConfig = ClusteringConfig(), apex=None) -> PyramidFit:
    """Alternate nearest-plane assignment and robust refits.

    Stops after ``cfg.max_iter`` rounds or once the pooled mean squared
    perpendicular distance drops to ``cfg.residual_threshold``. Clusters that
    cannot support a fit keep their previous plane.
    """
    pts = np.asarray(positives, dtype=float).reshape(-1, 3)
    init = init_planes(pts, bbox, apex)
    planes = list(init.planes)
    residual = np.inf
    history: list[float] = []
    sizes = init.cluster_sizes
    it = 0
    while it < cfg.max_iter and residual > cfg.residual_threshold:
        labels = assign_planes(pts, planes)
        total = 0.0
        for i in range(4):
            members = pts[labels == i]
            planes[i], res = fit_plane_robust(members, cfg, planes[i])
            total += res * len(members)
        residual = total / len(pts)
        sizes = tuple(int(np.sum(labels == i)) for i in range(4))
        history.append(residual)
        it += 1
        log.debug("iteration %d residual %.3e sizes %s", it, residual, sizes)
    return PyramidFit(tuple(planes), _apex_of(planes, init.apex), it, float(residual), sizes, history)


def base_quad(planes) -> Quad:
    """Quad bounded by the z=0 traces of four planes taken in cyclic order."""
    try:
        lines: list[Line2] = [plane_base_intersection(p) for p in planes]
    except HorizontalPlane as exc:
        raise DegenerateQuad("a supporting plane is horizontal") from exc
    corners = []
    for i in range(4):
        l1, l2 = lines[i], lines[(i + 1) % 4]
        if abs(l1.p * l2.q - l2.p * l1.q) < np.sin(MIN_CORNER_ANGLE):
            raise DegenerateQuad(f"base lines {i} and {(i + 1) % 4} are nearly parallel")
        try:
            corners.append(line_intersection(l1, l2))
        except ParallelLines as exc:
            raise DegenerateQuad(str(exc)) from exc
    return Quad(corners)


def decode_pyramid(mask: SoftMask, bbox=None, cfg: ClusteringConfig = ClusteringConfig()) -> DecodeResult:
    """Plane-clustering decode of ``mask``; ``bbox`` defaults to the mask's own box."""
    bbox = mask.box if bbox is None else Box(*bbox)
    pts = select_positive(mask, cfg)
    if _xy_degenerate(pts[:, :2]):
        raise DegenerateQuad("positive cells are collinear; no pyramid can be fitted")
    try:
        fit = cluster_planes(pts, bbox, cfg)
    except DegeneratePlane as exc:
        raise DegenerateQuad(f"cannot initialize pyramid: {exc}") from exc
    return DecodeResult(base_quad(fit.planes), fit, len(pts))
