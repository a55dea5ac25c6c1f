"""Pixel-set algebra over BinaryMask.

Pure functions over immutable values. Unions/intersections stay exact
(boolean arrays); pooled coverage is exact pixel counting divided by the
cell footprint, so value * cell**2 is always an integer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .core import BinaryMask, empty_mask
from .errors import EmptyMask, InvalidDimensions, InvalidParam


@dataclass(frozen=True)
class CoverageGrid:
    """Fraction of each token cell covered by a mask."""

    rows: int
    cols: int
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.rows, self.cols):
            raise InvalidDimensions(
                f"coverage values {values.shape} != ({self.rows}, {self.cols})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _same_dims(a: BinaryMask, b: BinaryMask) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise InvalidDimensions(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def area(mask: BinaryMask) -> int:
    """Count of 1-pixels (the odd runs by construction)."""
    return mask.area


def union(
    masks: Sequence[BinaryMask] | Iterable[BinaryMask],
    width: int | None = None,
    height: int | None = None,
) -> BinaryMask:
    """Pixel-wise OR; an empty list yields the all-zeros mask of the given dims."""
    masks = list(masks)
    if not masks:
        if width is None or height is None:
            raise InvalidDimensions("union of no masks needs explicit width/height")
        return empty_mask(width, height)
    first = masks[0]
    if width is not None and (width, height) != (first.width, first.height):
        raise InvalidDimensions("explicit dims disagree with mask dims")
    acc = first.to_array()
    for m in masks[1:]:
        _same_dims(first, m)
        acc |= m.to_array()
    return BinaryMask.from_array(acc)


def intersect(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    """Pixel-wise AND."""
    _same_dims(a, b)
    return BinaryMask.from_array(a.to_array() & b.to_array())


def complement(mask: BinaryMask) -> BinaryMask:
    """Pixel-wise NOT."""
    return BinaryMask.from_array(~mask.to_array())


def intersection_area(a: BinaryMask, b: BinaryMask) -> int:
    _same_dims(a, b)
    return int(np.count_nonzero(a.to_array() & b.to_array()))


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """|a AND b| / |a OR b|; 0.0 when both masks are empty."""
    _same_dims(a, b)
    aa = a.to_array()
    bb = b.to_array()
    inter = int(np.count_nonzero(aa & bb))
    uni = int(np.count_nonzero(aa | bb))
    return inter / uni if uni else 0.0


def asym_overlap(new_mask: BinaryMask, tracked_mask: BinaryMask) -> float:
    """Fraction of the new mask covered by the tracked mask (direction-sensitive)."""
    _same_dims(new_mask, tracked_mask)
    denom = new_mask.area
    if denom == 0:
        raise EmptyMask("asym_overlap needs a nonempty new mask")
    inter = int(np.count_nonzero(new_mask.to_array() & tracked_mask.to_array()))
    return inter / denom


def pooled_coverage(mask: BinaryMask, cell: int) -> CoverageGrid:
    """Average-pool the mask over cell x cell footprints.

    Non-divisible dims are zero-padded right/bottom, so border cells divide
    by the full cell footprint (a conservative underestimate at the border).
    """
    if cell <= 0:
        raise InvalidParam(f"cell must be positive, got {cell}")
    rows = -(-mask.height // cell)
    cols = -(-mask.width // cell)
    arr = mask.to_array()
    padded = np.zeros((rows * cell, cols * cell), dtype=np.int64)
    padded[: mask.height, : mask.width] = arr
    counts = padded.reshape(rows, cell, cols, cell).sum(axis=(1, 3))
    return CoverageGrid(rows, cols, counts / float(cell * cell))


def morph_cleanup(mask: BinaryMask, min_area: int, radius: int) -> BinaryMask:
    """Open-then-close with a square element, then drop small 4-connected
    components. radius 0 skips morphology; min_area <= 1 keeps everything."""
    arr = mask.to_array()
    if radius > 0:
        arr = kernels.dilate(kernels.erode(arr, radius), radius)
        arr = kernels.erode(kernels.dilate(arr, radius), radius)
    if min_area > 1 and arr.any():
        labels = kernels.label_components(arr)
        counts = np.bincount(labels.reshape(-1))
        keep = counts >= min_area
        keep[0] = False
        arr = keep[labels]
    return BinaryMask.from_array(arr)


def bbox_of(mask: BinaryMask) -> tuple[int, int, int, int] | None:
    """Tight inclusive (x1, y1, x2, y2) over 1-pixels; None when empty."""
    arr = mask.to_array()
    ys, xs = np.nonzero(arr)
    if ys.size == 0:
        return None
    return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())
