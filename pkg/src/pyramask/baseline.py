"""
Mask R-CNN style post-processing used as the comparison decoder:
binarize, keep the largest 8-connected component, fit the minimum-area
rotated rectangle to its cell centers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateInput, EmptyMask
from .geometry import Quad, min_area_rect
from .pyramid_label import SoftMask

DEFAULT_THRESHOLD = 0.5
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray  # (height, width) bool

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True, eq=False)
class Component:
    rows: np.ndarray
    cols: np.ndarray

    @property
    def area(self) -> int:
        return int(self.rows.size)

    @property
    def first_index(self) -> tuple[int, int]:
        """Smallest (row, col) cell in raster order."""
        k = np.lexsort((self.cols, self.rows))[0]
        return int(self.rows[k]), int(self.cols[k])


def binarize(mask: SoftMask, threshold: float = DEFAULT_THRESHOLD) -> BinaryMask:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    return BinaryMask(mask.scores > threshold)


def connected_components(bm: BinaryMask) -> list[Component]:
    """8-connected components, ordered by their first cell in raster order."""
    labels, count = ndimage.label(bm.bits, structure=EIGHT_CONNECTED)
    comps = []
    for k in range(1, count + 1):
        rows, cols = np.nonzero(labels == k)
        comps.append(Component(rows, cols))
    return comps


def largest_component(comps: list[Component]) -> Component:
    # scipy labels in raster order, so the first max is the tie-break winner;
    # sort explicitly anyway so the result does not hinge on that
    return min(comps, key=lambda c: (-c.area, c.first_index))


def decode_baseline(mask: SoftMask, bbox=None, threshold: float = DEFAULT_THRESHOLD,
                    inflate: bool = False) -> Quad:
    """Minimum-area rectangle around the largest component of the binarized mask.

    ``bbox`` is accepted for signature parity with the pyramid decoder; the
    mask's own box defines the cell-to-image mapping. With ``inflate`` the
    four corners of each cell are used instead of its center.
    """
    comps = connected_components(binarize(mask, threshold))
    if not comps:
        raise EmptyMask(f"no cell above {threshold}")
    comp = largest_component(comps)
    sx = mask.box.width / mask.width
    sy = mask.box.height / mask.height
    if inflate:
        offsets = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    else:
        offsets = np.array([[0.5, 0.5]])
    gx = (comp.cols[:, None] + offsets[None, :, 0]).ravel()
    gy = (comp.rows[:, None] + offsets[None, :, 1]).ravel()
    pts = np.column_stack([mask.box.x0 + gx * sx, mask.box.y0 + gy * sy])
    try:
        return min_area_rect(pts)
    except DegenerateInput as exc:
        raise DegenerateInput(f"largest component cannot span a rectangle: {exc}") from exc
