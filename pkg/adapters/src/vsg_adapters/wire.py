"""The vsgkit mask-file wire format, reimplemented from its spec: JSON lines
with a {width, height, fps, n_frames} header and one {frame, object_id, rle}
entry per mask, sorted by (frame, object_id). Runs are row-major, alternating
zero/one counts, starting with the zero-run count (canonical: no interior
zero-length runs, a leading 0 only when the first pixel is 1)."""

from __future__ import annotations

import json
from typing import Iterator, Mapping

import numpy as np


def encode_rle(mask: np.ndarray) -> list[int]:
    bits = np.ascontiguousarray(mask, dtype=bool).reshape(-1)
    if bits.size == 0:
        return []
    boundaries = np.flatnonzero(bits[1:] != bits[:-1]) + 1
    edges = np.concatenate(([0], boundaries, [bits.size]))
    runs = np.diff(edges).tolist()
    if bits[0]:
        runs = [0] + runs
    return [int(r) for r in runs]


def mask_file_lines(
    width: int,
    height: int,
    fps: float,
    n_frames: int,
    masks_by_frame: Mapping[int, list[np.ndarray]],
) -> Iterator[str]:
    yield json.dumps(
        {"width": width, "height": height, "fps": fps, "n_frames": n_frames},
        separators=(",", ":"),
    )
    for frame in sorted(masks_by_frame):
        for object_id, mask in enumerate(masks_by_frame[frame], start=1):
            yield json.dumps(
                {"frame": frame, "object_id": object_id, "rle": encode_rle(mask)},
                separators=(",", ":"),
            )
