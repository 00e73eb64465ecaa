"""Soft pyramid labels and plane-clustering quad recovery for text masks."""
from .baseline import decode_baseline
from .errors import (
    DegenerateInput,
    DegeneratePlane,
    DegenerateQuad,
    DimensionMismatch,
    EmptyDataset,
    EmptyMask,
    HorizontalPlane,
    NonConvexInput,
    ParallelLines,
    PyramaskError,
    SingularDecomposition,
)
from .evaluation import compute_anchor_ratios, iou_sweep, match_greedy, prf
from .geometry import Box, Line2, Plane, Quad, min_area_rect, polygon_iou
from .plane_clustering import ClusteringConfig, DecodeResult, PyramidFit, decode_pyramid
from .pyramid_label import SoftMask, pyramid_score, rasterize_label

__version__ = "0.1.0"
