"""Coverage-optimized greedy filtering of redundant mask proposals.

Proposals are visited largest-first; one is kept only while it is not
already ~90% covered by what was kept before it. A fallback sweep then
re-admits rejected proposals that still own uncovered pixels, so the union
of the selection always equals the union of the full input.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import BinaryMask
from .errors import InvalidDimensions


def filter_proposals(
    proposals: Sequence[BinaryMask], overlap_thresh: float = 0.9
) -> list[int]:
    """Return indices of kept proposals, in visit (area-descending) order.

    Empty proposals are never selected. Ties in area break by ascending
    input index. Visiting stops early once the running union covers the
    union of all proposals.
    """
    if not proposals:
        return []
    first = proposals[0]
    for p in proposals[1:]:
        if (p.width, p.height) != (first.width, first.height):
            raise InvalidDimensions("proposals must share dimensions")

    arrays = [p.to_array() for p in proposals]
    full = np.zeros_like(arrays[0])
    for a in arrays:
        full |= a
    full_area = int(np.count_nonzero(full))

    order = sorted(range(len(proposals)), key=lambda i: (-proposals[i].area, i))
    covered = np.zeros_like(full)
    covered_area = 0
    selected: list[int] = []
    rejected: list[int] = []
    for idx in order:
        if covered_area == full_area:
            break
        a = arrays[idx]
        denom = proposals[idx].area
        if denom == 0:
            continue
        overlap = int(np.count_nonzero(a & covered)) / denom
        if overlap < overlap_thresh:
            selected.append(idx)
            covered |= a
            covered_area = int(np.count_nonzero(covered))
        else:
            rejected.append(idx)

    if covered_area != full_area:
        for idx in rejected:
            new_pixels = int(np.count_nonzero(arrays[idx] & ~covered))
            if new_pixels:
                selected.append(idx)
                covered |= arrays[idx]
                covered_area += new_pixels
                if covered_area == full_area:
                    break
    return selected
