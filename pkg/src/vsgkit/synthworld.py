"""Deterministic synthetic videos with ground truth, plus the stand-ins for
an external segmenter (noisy proposer) and an external video tracker
(oracle propagator).

Occlusion is painter's order: occluder-flagged shapes draw above the rest,
later list order wins pixels within a tier. A shape whose visible pixels
fall below 5% of its in-frame footprint is absent everywhere for that frame
(ground truth, rendered video, and proposals), which keeps the zero-noise
pipeline exactly reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .core import BinaryMask, MaskVideo, Trajectory, empty_mask
from .errors import InvalidSpec, ParseError

VISIBILITY_FLOOR = 0.05
GHOST_IOU_FLOOR = 0.1


@dataclass(frozen=True)
class ShapeSpec:
    """One moving shape. position is the top-left corner for rectangles and
    the center for disks, at the entry frame; velocity is px/frame."""

    kind: str
    size: tuple[int, int] | int
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    entry_frame: int = 0
    exit_frame: int | None = None
    occluder: bool = False

    def __post_init__(self):
        if self.kind not in ("rectangle", "disk"):
            raise InvalidSpec(f"unknown shape kind {self.kind!r}")
        if self.kind == "rectangle":
            w, h = self.size  # type: ignore[misc]
            if w <= 0 or h <= 0:
                raise InvalidSpec("rectangle size must be positive")
            object.__setattr__(self, "size", (int(w), int(h)))
        else:
            if int(self.size) <= 0:  # type: ignore[arg-type]
                raise InvalidSpec("disk radius must be positive")
            object.__setattr__(self, "size", int(self.size))  # type: ignore[arg-type]
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "velocity", (float(self.velocity[0]), float(self.velocity[1])))


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    n_frames: int
    width: int
    height: int
    shapes: tuple[ShapeSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if self.n_frames <= 0 or self.width <= 0 or self.height <= 0:
            raise InvalidSpec("scene must have positive n_frames, width, height")
        for shape in self.shapes:
            exit_frame = shape.exit_frame if shape.exit_frame is not None else self.n_frames
            if not (0 <= shape.entry_frame < exit_frame <= self.n_frames):
                raise InvalidSpec(
                    f"need 0 <= entry ({shape.entry_frame}) < exit ({exit_frame}) <= n_frames"
                )


@dataclass(frozen=True)
class NoiseSpec:
    """Proposal pathologies: misses, fragmentation, duplication, boundary
    jitter. All draws are keyed by (seed, frame, object order)."""

    drop_prob: float = 0.0
    split_prob: float = 0.0
    duplicate_prob: float = 0.0
    jitter_px: int = 0
    seed: int = 0

    def __post_init__(self):
        for name in ("drop_prob", "split_prob", "duplicate_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidSpec(f"{name} must be in [0, 1], got {p}")
        if self.jitter_px < 0:
            raise InvalidSpec("jitter_px must be >= 0")


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def _raster(shape: ShapeSpec, frame: int, width: int, height: int) -> np.ndarray:
    """Shape pixels at a frame, clipped to the frame. Empty outside lifetime."""
    t = frame - shape.entry_frame
    x = _round_half_up(shape.position[0] + shape.velocity[0] * t)
    y = _round_half_up(shape.position[1] + shape.velocity[1] * t)
    out = np.zeros((height, width), dtype=bool)
    if shape.kind == "rectangle":
        w, h = shape.size  # type: ignore[misc]
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + w, width), min(y + h, height)
        if x0 < x1 and y0 < y1:
            out[y0:y1, x0:x1] = True
    else:
        r = int(shape.size)  # type: ignore[arg-type]
        ys, xs = np.ogrid[:height, :width]
        out = (xs - x) ** 2 + (ys - y) ** 2 <= r * r
    return out


def _fits_frame(shape: ShapeSpec, width: int, height: int) -> bool:
    x = _round_half_up(shape.position[0])
    y = _round_half_up(shape.position[1])
    if shape.kind == "rectangle":
        w, h = shape.size  # type: ignore[misc]
        return 0 <= x and 0 <= y and x + w <= width and y + h <= height
    r = int(shape.size)  # type: ignore[arg-type]
    return r <= x < width - r and r <= y < height - r


def generate_scene(spec: SceneSpec) -> tuple[list[Trajectory], MaskVideo]:
    """Rasterize the scene; returns per-shape ground-truth trajectories
    (object ids are 1 + listing index) and the panoptic mask video."""
    for shape in spec.shapes:
        if not _fits_frame(shape, spec.width, spec.height):
            raise InvalidSpec(f"shape {shape.kind} does not fit the frame at entry")

    paint_order = sorted(
        range(len(spec.shapes)), key=lambda i: (spec.shapes[i].occluder, i)
    )
    per_object: dict[int, dict[int, BinaryMask]] = {i + 1: {} for i in range(len(spec.shapes))}
    frames: list[tuple[int, dict[int, BinaryMask]]] = []
    for t in range(spec.n_frames):
        owner = np.zeros((spec.height, spec.width), dtype=np.int32)
        footprint: dict[int, int] = {}
        for i in paint_order:
            shape = spec.shapes[i]
            exit_frame = shape.exit_frame if shape.exit_frame is not None else spec.n_frames
            if not shape.entry_frame <= t < exit_frame:
                continue
            raster = _raster(shape, t, spec.width, spec.height)
            footprint[i + 1] = int(np.count_nonzero(raster))
            owner[raster] = i + 1
        visible: dict[int, BinaryMask] = {}
        for oid, full in footprint.items():
            if full == 0:
                continue
            vis = owner == oid
            count = int(np.count_nonzero(vis))
            if count == 0 or count < VISIBILITY_FLOOR * full:
                continue
            mask = BinaryMask.from_array(vis)
            visible[oid] = mask
            per_object[oid][t] = mask
        if visible:
            frames.append((t, visible))

    trajectories = [
        Trajectory(oid, min(masks), masks)
        for oid, masks in sorted(per_object.items())
        if masks
    ]
    video = MaskVideo(tuple(frames), 1.0, spec.width, spec.height, spec.n_frames)
    return trajectories, video


def _rng_for(seed: int, *keys: int) -> np.random.Generator:
    entropy = [seed & 0xFFFFFFFFFFFFFFFF] + [k & 0xFFFFFFFFFFFFFFFF for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _split_rows(mask: BinaryMask) -> list[BinaryMask]:
    arr = mask.to_array()
    rows = np.flatnonzero(arr.any(axis=1))
    if rows.size < 2:
        return [mask]
    mid = (int(rows[0]) + int(rows[-1]) + 1) // 2
    top = arr.copy()
    top[mid:, :] = False
    bottom = arr.copy()
    bottom[:mid, :] = False
    halves = [BinaryMask.from_array(top), BinaryMask.from_array(bottom)]
    return [h for h in halves if not h.is_empty()] or [mask]


def _jitter(mask: BinaryMask, amount: int, grow: bool) -> BinaryMask | None:
    arr = mask.to_array()
    arr = kernels.dilate(arr, amount) if grow else kernels.erode(arr, amount)
    if not arr.any():
        return None
    return BinaryMask.from_array(arr)


def noisy_proposals(
    gt_masks: Mapping[int, BinaryMask], noise: NoiseSpec, frame: int
) -> list[BinaryMask]:
    """Degrade one frame's ground-truth masks into segmenter-style proposals."""
    rng = _rng_for(noise.seed, frame)
    out: list[BinaryMask] = []
    for oid in sorted(gt_masks):
        u_drop, u_split, u_dup = rng.random(3)
        if u_drop < noise.drop_prob:
            continue
        masks = [gt_masks[oid]]
        if u_split < noise.split_prob:
            masks = _split_rows(masks[0])
        if u_dup < noise.duplicate_prob:
            masks = masks + list(masks)
        if noise.jitter_px > 0:
            jittered = []
            for m in masks:
                grow = bool(rng.random() < 0.5)
                j = _jitter(m, noise.jitter_px, grow)
                if j is not None:
                    jittered.append(j)
            masks = jittered
        out.extend(masks)
    return out


def propose_video(scene_video: MaskVideo, noise: NoiseSpec) -> MaskVideo:
    """Run the noisy proposer over every frame; proposal ids are 1..k per frame."""
    frames: list[tuple[int, dict[int, BinaryMask]]] = []
    for t in range(scene_video.n_frames):
        proposals = noisy_proposals(scene_video.masks_at(t), noise, t)
        if proposals:
            frames.append((t, {i + 1: m for i, m in enumerate(proposals)}))
    return MaskVideo(
        tuple(frames),
        scene_video.fps,
        scene_video.width,
        scene_video.height,
        scene_video.n_frames,
    )


class OraclePropagator:
    """Ground-truth-backed mask propagator.

    Each registered id is bound to the ground-truth shape its registration
    mask best-IoU-matches at the registration frame; propagation then replays
    that shape's visible masks. A registration matching nothing (best IoU
    below 0.1) is kept as a static ghost of its registration mask. An
    optional degradation spec applies per-frame drops and boundary jitter.
    """

    def __init__(self, spec: SceneSpec, degradation: NoiseSpec | None = None):
        trajectories, _ = generate_scene(spec)
        self._gt: dict[int, Mapping[int, BinaryMask]] = {
            t.object_id: t.masks for t in trajectories
        }
        self._width = spec.width
        self._height = spec.height
        self._degradation = degradation
        self._binding: dict[int, int | None] = {}
        self._ghosts: dict[int, BinaryMask] = {}
        self._order: list[int] = []

    def reset(self) -> None:
        self._binding.clear()
        self._ghosts.clear()
        self._order.clear()

    def register(self, object_id: int, frame_index: int, mask: BinaryMask) -> None:
        best_id: int | None = None
        best_iou = 0.0
        reg = mask.to_array()
        reg_area = int(np.count_nonzero(reg))
        for gid in sorted(self._gt):
            gt_mask = self._gt[gid].get(frame_index)
            if gt_mask is None:
                continue
            gt_arr = gt_mask.to_array()
            inter = int(np.count_nonzero(reg & gt_arr))
            uni = reg_area + gt_mask.area - inter
            score = inter / uni if uni else 0.0
            if score > best_iou:
                best_iou = score
                best_id = gid
        if object_id not in self._binding:
            self._order.append(object_id)
        if best_id is not None and best_iou >= GHOST_IOU_FLOOR:
            self._binding[object_id] = best_id
        else:
            self._binding[object_id] = None
            self._ghosts[object_id] = mask

    def propagate(self, current_frame: int, target_frame: int) -> dict[int, BinaryMask]:
        out: dict[int, BinaryMask] = {}
        for tid in self._order:
            bound = self._binding[tid]
            if bound is None:
                mask = self._ghosts[tid]
            else:
                found = self._gt[bound].get(target_frame)
                mask = found if found is not None else empty_mask(self._width, self._height)
            if self._degradation is not None and not mask.is_empty():
                rng = _rng_for(self._degradation.seed, target_frame, tid)
                if rng.random() < self._degradation.drop_prob:
                    mask = empty_mask(self._width, self._height)
                elif self._degradation.jitter_px > 0:
                    grow = bool(rng.random() < 0.5)
                    jittered = _jitter(mask, self._degradation.jitter_px, grow)
                    mask = jittered if jittered is not None else empty_mask(
                        self._width, self._height
                    )
            out[tid] = mask
        return out


def oracle_propagator(
    spec: SceneSpec, degradation: NoiseSpec | None = None
) -> OraclePropagator:
    return OraclePropagator(spec, degradation)


# --- JSON config forms (CLI surface) ---------------------------------------


def scene_spec_to_json(spec: SceneSpec) -> str:
    return json.dumps(
        {
            "seed": spec.seed,
            "n_frames": spec.n_frames,
            "width": spec.width,
            "height": spec.height,
            "shapes": [
                {
                    "kind": s.kind,
                    "size": list(s.size) if isinstance(s.size, tuple) else s.size,
                    "position": list(s.position),
                    "velocity": list(s.velocity),
                    "entry_frame": s.entry_frame,
                    "exit_frame": s.exit_frame,
                    "occluder": s.occluder,
                }
                for s in spec.shapes
            ],
        },
        separators=(",", ":"),
    )


def scene_spec_from_json(text: str) -> SceneSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid scene spec JSON: {exc.msg}", line=exc.lineno, offset=exc.pos)
    try:
        shapes = tuple(
            ShapeSpec(
                kind=str(s["kind"]),
                size=tuple(s["size"]) if isinstance(s["size"], list) else int(s["size"]),
                position=tuple(s["position"]),
                velocity=tuple(s.get("velocity", (0.0, 0.0))),
                entry_frame=int(s.get("entry_frame", 0)),
                exit_frame=None if s.get("exit_frame") is None else int(s["exit_frame"]),
                occluder=bool(s.get("occluder", False)),
            )
            for s in doc["shapes"]
        )
        return SceneSpec(
            seed=int(doc["seed"]),
            n_frames=int(doc["n_frames"]),
            width=int(doc["width"]),
            height=int(doc["height"]),
            shapes=shapes,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad scene spec: {exc}")


def noise_spec_to_json(noise: NoiseSpec) -> str:
    return json.dumps(
        {
            "drop_prob": noise.drop_prob,
            "split_prob": noise.split_prob,
            "duplicate_prob": noise.duplicate_prob,
            "jitter_px": noise.jitter_px,
            "seed": noise.seed,
        },
        separators=(",", ":"),
    )


def noise_spec_from_json(text: str) -> NoiseSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid noise spec JSON: {exc.msg}", line=exc.lineno, offset=exc.pos)
    try:
        return NoiseSpec(
            drop_prob=float(doc.get("drop_prob", 0.0)),
            split_prob=float(doc.get("split_prob", 0.0)),
            duplicate_prob=float(doc.get("duplicate_prob", 0.0)),
            jitter_px=int(doc.get("jitter_px", 0)),
            seed=int(doc.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad noise spec: {exc}")
