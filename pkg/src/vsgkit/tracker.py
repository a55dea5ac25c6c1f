"""Online-offline two-stage tracking over a pluggable mask propagator.

The online pass seeds identities from the first frame's filtered proposals,
watches the untracked region every check interval, and registers new objects
at breakpoints. The offline pass resets the propagator, re-initializes every
registered object at its recorded entry frame, and replays the whole video
in one uninterrupted pass. A breakpoint-registered object's first online
mask lands at the frame after registration (its registration mask lives in
the registry), which is exactly the gap the offline replay recovers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

from .core import BinaryMask, MaskVideo, Registry, RegistryEntry, Trajectory, empty_mask
from .errors import EmptyMask, InvalidParam, PropagationError
from .maskops import asym_overlap, iou, morph_cleanup
from .proposals import filter_proposals


class PropagatorInterface(Protocol):
    """Contract for external mask propagators (the video-tracker stand-in).

    Implementations must be deterministic for a fixed seed, must never
    invent object ids, and may return an empty mask to signal a lost
    object. One tracker drives one propagator from a single thread.
    """

    def reset(self) -> None: ...

    def register(self, object_id: int, frame_index: int, mask: BinaryMask) -> None: ...

    def propagate(self, current_frame: int, target_frame: int) -> dict[int, BinaryMask]: ...


@dataclass(frozen=True)
class TrackerConfig:
    tau_detection: float = 0.1
    tau_match: float = 0.5
    check_interval: int = 1
    dedup_iou: float = 0.8
    dedup_covis_fraction: float = 0.8
    min_area: int = 200
    morph_radius: int = 1
    filter_overlap_thresh: float = 0.9

    def __post_init__(self):
        for name in (
            "tau_detection",
            "tau_match",
            "dedup_iou",
            "dedup_covis_fraction",
            "filter_overlap_thresh",
        ):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InvalidParam(f"{name} must be in (0, 1], got {v}")
        if self.check_interval < 1:
            raise InvalidParam("check_interval must be >= 1")
        if self.min_area < 0 or self.morph_radius < 0:
            raise InvalidParam("min_area and morph_radius must be >= 0")


@dataclass(frozen=True)
class BreakpointReport:
    frame: int
    untracked_area: int
    overlap_area: int
    ratio: float
    triggered: bool


def _union_array(masks: Sequence[BinaryMask], width: int, height: int) -> np.ndarray:
    acc = np.zeros((height, width), dtype=bool)
    for m in masks:
        acc |= m.to_array()
    return acc


def frame_coverage_state(
    tracked_masks: Sequence[BinaryMask],
    proposals: Sequence[BinaryMask],
    width: int,
    height: int,
    tau_detection: float = 0.1,
    frame: int = 0,
) -> BreakpointReport:
    """Compare the untracked region against the proposal union.

    ratio = area(untracked AND proposals) / area(untracked), 0 when nothing
    is untracked; a breakpoint triggers at ratio >= tau_detection.
    """
    tracked = _union_array(tracked_masks, width, height)
    untracked = ~tracked
    detected = _union_array(proposals, width, height)
    untracked_area = int(np.count_nonzero(untracked))
    overlap_area = int(np.count_nonzero(untracked & detected))
    ratio = overlap_area / untracked_area if untracked_area else 0.0
    return BreakpointReport(
        frame=frame,
        untracked_area=untracked_area,
        overlap_area=overlap_area,
        ratio=ratio,
        triggered=ratio >= tau_detection,
    )


def assign_identity(
    new_mask: BinaryMask,
    tracked: Mapping[int, BinaryMask],
    tau_match: float,
    next_id: int,
) -> tuple[int, bool]:
    """Match a candidate to an existing identity by asymmetric overlap.

    Returns (existing_id, False) when the best overlap reaches tau_match
    (ties break to the smallest id), else (next_id, True).
    """
    if new_mask.is_empty():
        raise EmptyMask("cannot assign identity to an empty mask")
    best_id: int | None = None
    best_ratio = 0.0
    for oid in sorted(tracked):
        other = tracked[oid]
        if other.is_empty():
            continue
        ratio = asym_overlap(new_mask, other)
        if ratio > best_ratio:
            best_ratio = ratio
            best_id = oid
    if best_id is not None and best_ratio >= tau_match:
        return best_id, False
    return next_id, True


def online_track(
    proposals: MaskVideo,
    propagator: PropagatorInterface,
    config: TrackerConfig = TrackerConfig(),
) -> tuple[MaskVideo, Registry]:
    """First pass: discover objects and record their entry frames."""
    width, height = proposals.width, proposals.height
    propagator.reset()
    entries: list[RegistryEntry] = []
    latest: dict[int, BinaryMask] = {}
    out_frames: dict[int, dict[int, BinaryMask]] = {}
    next_id = 1

    def filtered_at(t: int) -> list[BinaryMask]:
        raw = [m for _, m in sorted(proposals.masks_at(t).items())]
        keep = filter_proposals(raw, config.filter_overlap_thresh)
        return [raw[i] for i in keep]

    for mask in filtered_at(0):
        entries.append(RegistryEntry(next_id, 0, mask))
        propagator.register(next_id, 0, mask)
        latest[next_id] = mask
        next_id += 1
    if latest:
        out_frames[0] = dict(latest)

    for t in range(1, proposals.n_frames):
        try:
            propagated = propagator.propagate(t - 1, t)
        except Exception as exc:
            raise PropagationError(t, f"propagator failed: {exc}") from exc
        latest = {
            oid: propagated.get(oid, empty_mask(width, height)) for oid in latest
        }
        tracked_now = {oid: m for oid, m in latest.items() if not m.is_empty()}
        if tracked_now:
            out_frames[t] = dict(tracked_now)
        if t % config.check_interval != 0:
            continue
        frame_props = filtered_at(t)
        report = frame_coverage_state(
            list(tracked_now.values()),
            frame_props,
            width,
            height,
            config.tau_detection,
            frame=t,
        )
        if not report.triggered:
            continue
        untracked = ~_union_array(list(tracked_now.values()), width, height)
        for cand in frame_props:
            cand_area = cand.area
            if cand_area == 0:
                continue
            on_untracked = int(np.count_nonzero(cand.to_array() & untracked)) / cand_area
            if on_untracked < config.tau_detection:
                continue
            oid, is_new = assign_identity(cand, tracked_now, config.tau_match, next_id)
            if not is_new:
                continue
            entries.append(RegistryEntry(oid, t, cand))
            propagator.register(oid, t, cand)
            latest[oid] = cand
            tracked_now[oid] = cand
            next_id += 1

    frames = tuple((t, out_frames[t]) for t in sorted(out_frames))
    video = MaskVideo(frames, proposals.fps, width, height, proposals.n_frames)
    return video, Registry(tuple(entries))


def offline_track(
    registry: Registry,
    propagator: PropagatorInterface,
    n_frames: int,
    config: TrackerConfig | None = None,
) -> list[Trajectory]:
    """Second pass: reset, re-initialize every object at its entry frame, and
    replay all frames in one uninterrupted pass."""
    propagator.reset()
    for entry in registry.entries:
        propagator.register(entry.object_id, entry.entry_frame, entry.mask)
    masks_by_object: dict[int, dict[int, BinaryMask]] = {
        e.object_id: {} for e in registry.entries
    }
    for t in range(n_frames):
        try:
            propagated = propagator.propagate(t - 1, t)
        except Exception as exc:
            raise PropagationError(t, f"propagator failed: {exc}") from exc
        for entry in registry.entries:
            if t < entry.entry_frame:
                continue
            mask = propagated.get(entry.object_id)
            if t == entry.entry_frame and (mask is None or mask.is_empty()):
                mask = entry.mask
            if mask is not None and not mask.is_empty():
                masks_by_object[entry.object_id][t] = mask
    return [
        Trajectory(e.object_id, e.entry_frame, masks_by_object[e.object_id])
        for e in registry.entries
    ]


def postfilter(
    trajectories: Sequence[Trajectory], config: TrackerConfig = TrackerConfig()
) -> list[Trajectory]:
    """Drop near-duplicate tracks (sustained high per-frame IoU over the
    co-visible frames), then morphologically clean every mask."""
    alive: dict[int, Trajectory] = {t.object_id: t for t in trajectories}
    ids = sorted(alive)
    for pos, a in enumerate(ids):
        if a not in alive:
            continue
        for b in ids[pos + 1 :]:
            if a not in alive:
                break
            if b not in alive:
                continue
            ta, tb = alive[a], alive[b]
            covis = sorted(set(ta.masks) & set(tb.masks))
            if not covis:
                continue
            hits = sum(
                1 for f in covis if iou(ta.masks[f], tb.masks[f]) >= config.dedup_iou
            )
            if hits / len(covis) >= config.dedup_covis_fraction:
                na, nb = len(ta.masks), len(tb.masks)
                if nb < na:
                    drop = b
                elif na < nb:
                    drop = a
                else:
                    drop = max(a, b)
                del alive[drop]
    survivors = [t for t in trajectories if t.object_id in alive]
    cleaned: list[Trajectory] = []
    for traj in survivors:
        masks = {}
        for frame, mask in traj.masks.items():
            new = morph_cleanup(mask, config.min_area, config.morph_radius)
            if not new.is_empty():
                masks[frame] = new
        if masks:
            cleaned.append(Trajectory(traj.object_id, min(masks), masks))
    return cleaned


def mask_coverage(
    trajectories: Sequence[Trajectory], width: int, height: int, n_frames: int
) -> float:
    """Mean over frames of (area of the union of all masks) / frame area."""
    if n_frames <= 0 or width <= 0 or height <= 0:
        raise InvalidParam("mask_coverage needs positive dims and n_frames")
    per_frame: dict[int, np.ndarray] = {}
    for traj in trajectories:
        for frame, mask in traj.masks.items():
            if frame in per_frame:
                per_frame[frame] |= mask.to_array()
            else:
                per_frame[frame] = mask.to_array().copy()
    total = sum(int(np.count_nonzero(arr)) for arr in per_frame.values())
    return total / (width * height * n_frames)
