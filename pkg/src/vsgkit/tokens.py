"""Trajectory-aligned token selection and stream construction.

A token covers frames_per_token consecutive frames and a square pixel cell
of patch_merge * patch_px per side. An object's coverage score at a token is
the pooled mask coverage, maxed over the token's merged frames; tokens at or
above the selection threshold form the object's index set. Streams carry
trajectory boundary markers, object-id marks, and summary slots only; the
selected visual tokens themselves are consumed downstream by the resampler.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import BinaryMask, Trajectory
from .errors import InvalidDimensions, InvalidParam
from .maskops import pooled_coverage

STREAM_KINDS = (
    "traj_start",
    "traj_end",
    "object_id",
    "vis_token",
    "timestamp",
    "global_summary",
    "window_summary",
)


@dataclass(frozen=True)
class TokenGridSpec:
    """Geometry of the spatiotemporal token lattice."""

    frames_per_token: int
    patch_merge: int
    patch_px: int
    width: int
    height: int
    n_frames: int
    fps: float

    def __post_init__(self):
        if min(self.frames_per_token, self.patch_merge, self.patch_px) < 1:
            raise InvalidParam("frames_per_token, patch_merge, patch_px must be >= 1")
        if self.n_frames < 1 or self.width < 1 or self.height < 1:
            raise InvalidParam("grid needs positive n_frames, width, height")

    @property
    def cell(self) -> int:
        return self.patch_merge * self.patch_px

    @property
    def t_groups(self) -> int:
        return -(-self.n_frames // self.frames_per_token)

    @property
    def rows(self) -> int:
        return -(-self.height // self.cell)

    @property
    def cols(self) -> int:
        return -(-self.width // self.cell)


@dataclass(frozen=True, order=True)
class TokenIndex:
    """Grid coordinates (time group, cell row, cell column)."""

    t: int
    row: int
    col: int


@dataclass(frozen=True)
class TokenSelection:
    object_id: int
    indices: tuple[TokenIndex, ...]

    def __post_init__(self):
        indices = tuple(sorted(set(self.indices)))
        object.__setattr__(self, "indices", indices)


@dataclass(frozen=True)
class StreamElement:
    kind: str
    object_id: int | None = None
    token: TokenIndex | None = None
    seconds: float | None = None
    window: int | None = None

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise InvalidParam(f"unknown stream element kind {self.kind!r}")

    def to_json(self) -> str:
        doc: dict = {"kind": self.kind}
        if self.object_id is not None:
            doc["object_id"] = self.object_id
        if self.token is not None:
            doc["token"] = [self.token.t, self.token.row, self.token.col]
        if self.seconds is not None:
            doc["seconds"] = self.seconds
        if self.window is not None:
            doc["window"] = self.window
        return json.dumps(doc, separators=(",", ":"))


def coverage_scores(
    object_masks: Trajectory | Mapping[int, BinaryMask], spec: TokenGridSpec
) -> np.ndarray:
    """Coverage score per token: pooled mask coverage, maxed over each
    token's merged frames. Frames past n_frames contribute 0."""
    masks = object_masks.masks if isinstance(object_masks, Trajectory) else object_masks
    scores = np.zeros((spec.t_groups, spec.rows, spec.cols), dtype=np.float64)
    for frame, mask in masks.items():
        if not 0 <= frame < spec.n_frames:
            continue
        if (mask.width, mask.height) != (spec.width, spec.height):
            raise InvalidDimensions(
                f"mask {mask.width}x{mask.height} does not match grid "
                f"{spec.width}x{spec.height}"
            )
        group = frame // spec.frames_per_token
        grid = pooled_coverage(mask, spec.cell)
        np.maximum(scores[group], grid.values, out=scores[group])
    return scores


def select_tokens(
    scores: np.ndarray, tau_eff: float = 0.5, object_id: int = 0
) -> TokenSelection:
    """Indices whose score reaches tau_eff, sorted by (t, row, col)."""
    hits = np.argwhere(np.asarray(scores) >= tau_eff)
    indices = tuple(TokenIndex(int(t), int(r), int(c)) for t, r, c in hits)
    return TokenSelection(object_id, indices)


def partition_windows(
    selection: TokenSelection, spec: TokenGridSpec, window_seconds: float = 4.0
) -> dict[int, TokenSelection]:
    """Split a selection into disjoint temporal windows.

    A token group belongs to the window containing its start frame; empty
    windows are absent from the map.
    """
    if spec.fps <= 0:
        raise InvalidParam("fps must be positive to place windows")
    if window_seconds <= 0:
        raise InvalidParam("window_seconds must be positive")
    buckets: dict[int, list[TokenIndex]] = {}
    for index in selection.indices:
        start_seconds = index.t * spec.frames_per_token / spec.fps
        window = int(math.floor(start_seconds / window_seconds))
        buckets.setdefault(window, []).append(index)
    return {
        w: TokenSelection(selection.object_id, tuple(buckets[w]))
        for w in sorted(buckets)
    }


def arrange_stream(
    selections: Sequence[TokenSelection],
    windows_by_object: Mapping[int, Mapping[int, TokenSelection]],
    window_seconds: float = 4.0,
) -> list[StreamElement]:
    """Build the trajectory-delimited stream: per object in ascending id,
    start marker, id mark, global summary slot, then (timestamp, window
    summary slot) per occupied window in temporal order, end marker."""
    ids = [s.object_id for s in selections]
    if len(ids) != len(set(ids)):
        raise InvalidParam("selections must have unique object ids")
    stream: list[StreamElement] = []
    for sel in sorted(selections, key=lambda s: s.object_id):
        stream.append(StreamElement("traj_start"))
        stream.append(StreamElement("object_id", object_id=sel.object_id))
        stream.append(StreamElement("global_summary"))
        windows = windows_by_object.get(sel.object_id, {})
        for w in sorted(windows):
            if not windows[w].indices:
                continue
            stream.append(StreamElement("timestamp", seconds=w * window_seconds))
            stream.append(StreamElement("window_summary", window=w))
        stream.append(StreamElement("traj_end"))
    return stream
