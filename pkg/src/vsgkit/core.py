"""Canonical domain types, the RLE mask codec, and file formats.

All types are immutable values; nothing here mutates shared state.

RLE convention: row-major scan, runs alternate zero-run/one-run counts and
start with the zero-run count. Canonical form forbids interior zero-length
runs; a leading 0 appears exactly when the first pixel is 1. Two masks with
equal pixel sets therefore have identical runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import CorruptMask, InvalidDimensions, ParseError

RELATION_CATEGORIES = (
    "spatial",
    "functional",
    "stateful",
    "motion",
    "social",
    "attentional",
    "event_level",
)

CAMERA_ID = -1

UNCERTAIN_SUFFIX = "(uncertain)"


def _check_runs(width: int, height: int, runs: tuple[int, ...]) -> None:
    total = width * height
    if width < 0 or height < 0:
        raise InvalidDimensions(f"negative mask dimensions {width}x{height}")
    if total == 0:
        if runs:
            raise CorruptMask("zero-size mask must have empty runs")
        return
    if not runs:
        raise CorruptMask("empty runs for nonzero-size mask")
    if any(r < 0 for r in runs):
        raise CorruptMask("negative run length")
    if runs[0] == 0 and len(runs) == 1:
        raise CorruptMask("lone zero run")
    if any(r == 0 for r in runs[1:]):
        raise CorruptMask("interior zero-length run")
    if sum(runs) != total:
        raise CorruptMask(f"runs sum to {sum(runs)}, expected {total}")


@dataclass(frozen=True)
class BinaryMask:
    """A width x height pixel set stored as canonical row-major RLE."""

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self):
        runs = tuple(int(r) for r in self.runs)
        object.__setattr__(self, "runs", runs)
        _check_runs(self.width, self.height, runs)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BinaryMask":
        """Encode a 2-D (height, width) array; nonzero pixels are foreground."""
        a = np.asarray(arr)
        if a.ndim != 2:
            raise InvalidDimensions(f"expected 2-D array, got shape {a.shape}")
        height, width = a.shape
        return rle_encode(a.reshape(-1), width, height)

    def to_array(self) -> np.ndarray:
        """Decode to a (height, width) bool array."""
        return rle_decode(self).reshape(self.height, self.width)

    @property
    def area(self) -> int:
        return int(sum(self.runs[1::2]))

    def is_empty(self) -> bool:
        return self.area == 0


def rle_encode(pixels: Sequence[int] | np.ndarray, width: int, height: int) -> BinaryMask:
    """Encode a flat row-major bit sequence into a canonical BinaryMask."""
    bits = np.asarray(pixels).reshape(-1) != 0
    if width < 0 or height < 0 or bits.size != width * height:
        raise InvalidDimensions(
            f"{bits.size} pixels cannot fill a {width}x{height} mask"
        )
    if bits.size == 0:
        return BinaryMask(width, height, ())
    boundaries = np.flatnonzero(bits[1:] != bits[:-1]) + 1
    edges = np.concatenate(([0], boundaries, [bits.size]))
    runs = np.diff(edges)
    if bits[0]:
        runs = np.concatenate(([0], runs))
    return BinaryMask(width, height, tuple(int(r) for r in runs))


def rle_decode(mask: BinaryMask) -> np.ndarray:
    """Decode a BinaryMask to its flat row-major bit sequence (bool array)."""
    total = mask.width * mask.height
    if sum(mask.runs) != total:
        raise CorruptMask(f"runs sum to {sum(mask.runs)}, expected {total}")
    if total == 0:
        return np.zeros(0, dtype=bool)
    values = np.zeros(len(mask.runs), dtype=bool)
    values[1::2] = True
    return np.repeat(values, np.asarray(mask.runs, dtype=np.int64))


def empty_mask(width: int, height: int) -> BinaryMask:
    total = width * height
    return BinaryMask(width, height, (total,) if total else ())


def full_mask(width: int, height: int) -> BinaryMask:
    total = width * height
    return BinaryMask(width, height, (0, total) if total else ())


@dataclass(frozen=True)
class MaskVideo:
    """Per-frame object masks for one video. Frames are sparse: frames with
    no masks are simply absent. ``n_frames`` fixes the video length."""

    frames: tuple[tuple[int, Mapping[int, BinaryMask]], ...]
    fps: float
    width: int
    height: int
    n_frames: int

    def __post_init__(self):
        norm = []
        prev = -1
        for frame_index, masks in self.frames:
            if frame_index <= prev:
                raise InvalidDimensions("frame indices must be strictly increasing")
            if frame_index >= self.n_frames:
                raise InvalidDimensions(
                    f"frame {frame_index} outside video of {self.n_frames} frames"
                )
            prev = frame_index
            for oid, m in masks.items():
                if oid <= 0:
                    raise InvalidDimensions(f"object ids must be positive, got {oid}")
                if (m.width, m.height) != (self.width, self.height):
                    raise InvalidDimensions(
                        f"mask {m.width}x{m.height} in {self.width}x{self.height} video"
                    )
            norm.append((int(frame_index), dict(sorted(masks.items()))))
        object.__setattr__(self, "frames", tuple(norm))

    def masks_at(self, frame_index: int) -> Mapping[int, BinaryMask]:
        for fi, masks in self.frames:
            if fi == frame_index:
                return masks
        return {}

    def to_trajectories(self) -> list["Trajectory"]:
        """Group per-frame masks into per-object trajectories (ascending id)."""
        by_object: dict[int, dict[int, BinaryMask]] = {}
        for frame_index, masks in self.frames:
            for oid, m in masks.items():
                by_object.setdefault(oid, {})[frame_index] = m
        return [
            Trajectory(oid, min(frames), frames)
            for oid, frames in sorted(by_object.items())
        ]


@dataclass(frozen=True)
class Trajectory:
    """One object's identity and masks over time; gaps mean occlusion."""

    object_id: int
    entry_frame: int
    masks: Mapping[int, BinaryMask]

    def __post_init__(self):
        masks = dict(sorted((int(k), v) for k, v in self.masks.items()))
        object.__setattr__(self, "masks", masks)
        if masks and self.entry_frame != min(masks):
            raise InvalidDimensions(
                f"entry_frame {self.entry_frame} != first mask frame {min(masks)}"
            )

    def present_frames(self) -> list[int]:
        return list(self.masks)


@dataclass(frozen=True)
class RegistryEntry:
    object_id: int
    entry_frame: int
    mask: BinaryMask


@dataclass(frozen=True)
class Registry:
    """Initial appearance record of each object, in registration order."""

    entries: tuple[RegistryEntry, ...]

    def __post_init__(self):
        ids = [e.object_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise InvalidDimensions("registry object ids must be unique")

    def ids(self) -> list[int]:
        return [e.object_id for e in self.entries]


@dataclass(frozen=True)
class SceneObject:
    object_id: int
    label: str
    uncertain: bool = False
    attributes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))


def parse_label(raw: str) -> tuple[str, bool]:
    """Split a raw label into (label, uncertain) by the trailing tag."""
    text = raw.strip()
    if text.lower().endswith(UNCERTAIN_SUFFIX):
        return text[: -len(UNCERTAIN_SUFFIX)].strip(), True
    return text, False


@dataclass(frozen=True)
class Relation:
    """subject --predicate--> object over inclusive frame spans.

    subject_id -1 denotes the camera/observer. Construction is permissive;
    rule checking lives in validate_scene_graph so violations stay data.
    """

    subject_id: int
    predicate: str
    object_id: int
    spans: tuple[tuple[int, int], ...]
    category: str

    def __post_init__(self):
        spans = tuple((int(s), int(e)) for s, e in self.spans)
        object.__setattr__(self, "spans", spans)


def merge_spans(spans: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    """Sort spans and merge overlapping or adjacent ones (inclusive ends)."""
    ordered = sorted((int(s), int(e)) for s, e in spans)
    merged: list[list[int]] = []
    for s, e in ordered:
        if merged and s <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return tuple((s, e) for s, e in merged)


@dataclass(frozen=True)
class VideoMeta:
    n_frames: int
    fps: float
    width: int
    height: int


@dataclass(frozen=True)
class SceneGraph:
    objects: tuple[SceneObject, ...]
    relations: tuple[Relation, ...]
    video_meta: VideoMeta

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "relations", tuple(self.relations))

    def labels_by_id(self) -> dict[int, str]:
        return {o.object_id: o.label for o in self.objects}

    def attributes_by_id(self) -> dict[int, tuple[str, ...]]:
        return {o.object_id: o.attributes for o in self.objects}


def validate_scene_graph(graph: SceneGraph) -> list[str]:
    """Check every graph rule; returns one message per violation (empty = ok).

    Violations are data, not errors: a malformed graph is representable and
    reportable. The check is order-insensitive over the relation list.
    """
    violations: list[str] = []
    seen_ids: set[int] = set()
    for obj in graph.objects:
        if obj.object_id in seen_ids:
            violations.append(f"objects: duplicate id {obj.object_id}")
        seen_ids.add(obj.object_id)
        if obj.object_id == CAMERA_ID:
            violations.append("objects: camera id -1 is reserved and may not be an object")
        elif obj.object_id <= 0:
            violations.append(f"objects: id {obj.object_id} must be positive")
        if not obj.label.strip():
            violations.append(f"objects: id {obj.object_id} has an empty label")
    known = {o.object_id for o in graph.objects}
    for rel in sorted(
        graph.relations,
        key=lambda r: (r.subject_id, r.object_id, r.predicate, r.spans, r.category),
    ):
        name = f"relation ({rel.subject_id}, {rel.predicate!r}, {rel.object_id})"
        if rel.subject_id == rel.object_id:
            violations.append(f"{name}: self-relation")
        for endpoint in (rel.subject_id, rel.object_id):
            if endpoint != CAMERA_ID and endpoint not in known:
                violations.append(f"{name}: unknown endpoint {endpoint}")
        if rel.category not in RELATION_CATEGORIES:
            violations.append(f"{name}: unknown category {rel.category!r}")
        if not rel.predicate.strip():
            violations.append(f"{name}: empty predicate")
        last_end = None
        for s, e in rel.spans:
            if s > e:
                violations.append(f"{name}: span [{s}, {e}] has start > end")
            if last_end is not None and s <= last_end:
                violations.append(f"{name}: spans overlap or are out of order at [{s}, {e}]")
            last_end = max(e, last_end) if last_end is not None else e
    return violations


# ---------------------------------------------------------------------------
# Wire formats.
#
# Scene-graph file: one JSON document, fixed key order, relations as 5-tuples
#   {"video": {...}, "objects": [...], "relationships": [[s, pred, o, [[a,b],..], cat], ...]}
# Mask file / registry file: JSON lines with a header line carrying the
# dimensions needed to decode the RLE payloads.
# ---------------------------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def scene_graph_to_json(graph: SceneGraph) -> str:
    doc = {
        "video": {
            "n_frames": graph.video_meta.n_frames,
            "fps": graph.video_meta.fps,
            "width": graph.video_meta.width,
            "height": graph.video_meta.height,
        },
        "objects": [
            {
                "id": o.object_id,
                "label": o.label,
                "uncertain": o.uncertain,
                "attributes": list(o.attributes),
            }
            for o in graph.objects
        ],
        "relationships": [
            [
                r.subject_id,
                r.predicate,
                r.object_id,
                [[s, e] for s, e in r.spans],
                r.category,
            ]
            for r in graph.relations
        ],
    }
    return _dumps(doc)


def scene_graph_from_json(text: str) -> SceneGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid scene-graph JSON: {exc.msg}", line=exc.lineno, offset=exc.pos)
    if not isinstance(doc, dict):
        raise ParseError("scene-graph document must be a JSON object")
    for key in ("video", "objects", "relationships"):
        if key not in doc:
            raise ParseError(f"scene-graph document missing {key!r} key")
    video = doc["video"]
    try:
        meta = VideoMeta(
            n_frames=int(video["n_frames"]),
            fps=float(video["fps"]),
            width=int(video["width"]),
            height=int(video["height"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad video header: {exc}")
    objects = []
    for entry in doc["objects"]:
        try:
            label, tagged = parse_label(str(entry["label"]))
            uncertain = bool(entry.get("uncertain", False)) or tagged
            objects.append(
                SceneObject(
                    object_id=int(entry["id"]),
                    label=label,
                    uncertain=uncertain,
                    attributes=tuple(str(a) for a in entry.get("attributes", [])),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad object record {entry!r}: {exc}")
    relations = []
    for entry in doc["relationships"]:
        if not isinstance(entry, list) or len(entry) != 5:
            raise ParseError(f"relationship must be a 5-tuple, got {entry!r}")
        subject_id, predicate, object_id, spans, category = entry
        try:
            relations.append(
                Relation(
                    subject_id=int(subject_id),
                    predicate=str(predicate),
                    object_id=int(object_id),
                    spans=tuple((int(s), int(e)) for s, e in spans),
                    category=str(category),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad relationship record {entry!r}: {exc}")
    return SceneGraph(tuple(objects), tuple(relations), meta)


def write_scene_graph(path, graph: SceneGraph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scene_graph_to_json(graph))
        fh.write("\n")


def read_scene_graph(path) -> SceneGraph:
    with open(path, encoding="utf-8") as fh:
        return scene_graph_from_json(fh.read())


def mask_video_to_lines(video: MaskVideo) -> Iterator[str]:
    yield _dumps(
        {
            "width": video.width,
            "height": video.height,
            "fps": video.fps,
            "n_frames": video.n_frames,
        }
    )
    for frame_index, masks in video.frames:
        for oid, mask in masks.items():
            yield _dumps({"frame": frame_index, "object_id": oid, "rle": list(mask.runs)})


def write_mask_video(path, video: MaskVideo) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in mask_video_to_lines(video):
            fh.write(line)
            fh.write("\n")


def read_mask_video(path) -> MaskVideo:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty mask file", line=1)
    header = _parse_json_line(lines[0], 1)
    try:
        width = int(header["width"])
        height = int(header["height"])
        fps = float(header["fps"])
        n_frames = int(header["n_frames"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad mask file header: {exc}", line=1)
    per_frame: dict[int, dict[int, BinaryMask]] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        entry = _parse_json_line(raw, lineno)
        try:
            frame = int(entry["frame"])
            oid = int(entry["object_id"])
            runs = tuple(int(r) for r in entry["rle"])
            mask = BinaryMask(width, height, runs)
        except (KeyError, TypeError, ValueError, CorruptMask, InvalidDimensions) as exc:
            raise ParseError(f"bad mask entry: {exc}", line=lineno)
        per_frame.setdefault(frame, {})[oid] = mask
    frames = tuple((fi, per_frame[fi]) for fi in sorted(per_frame))
    return MaskVideo(frames, fps, width, height, n_frames)


def trajectories_to_mask_video(
    trajectories: Sequence[Trajectory], fps: float, width: int, height: int, n_frames: int
) -> MaskVideo:
    per_frame: dict[int, dict[int, BinaryMask]] = {}
    for traj in trajectories:
        for frame_index, mask in traj.masks.items():
            per_frame.setdefault(frame_index, {})[traj.object_id] = mask
    frames = tuple((fi, per_frame[fi]) for fi in sorted(per_frame))
    return MaskVideo(frames, fps, width, height, n_frames)


def registry_to_lines(registry: Registry, width: int, height: int) -> Iterator[str]:
    yield _dumps({"width": width, "height": height})
    for entry in registry.entries:
        yield _dumps(
            {
                "id": entry.object_id,
                "entry_frame": entry.entry_frame,
                "rle": list(entry.mask.runs),
            }
        )


def write_registry(path, registry: Registry, width: int, height: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in registry_to_lines(registry, width, height):
            fh.write(line)
            fh.write("\n")


def read_registry(path) -> Registry:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty registry file", line=1)
    header = _parse_json_line(lines[0], 1)
    try:
        width = int(header["width"])
        height = int(header["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad registry header: {exc}", line=1)
    entries = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        entry = _parse_json_line(raw, lineno)
        try:
            entries.append(
                RegistryEntry(
                    object_id=int(entry["id"]),
                    entry_frame=int(entry["entry_frame"]),
                    mask=BinaryMask(width, height, tuple(int(r) for r in entry["rle"])),
                )
            )
        except (KeyError, TypeError, ValueError, CorruptMask, InvalidDimensions) as exc:
            raise ParseError(f"bad registry entry: {exc}", line=lineno)
    return Registry(tuple(entries))


def _parse_json_line(raw: str, lineno: int) -> dict:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=lineno, offset=exc.pos)
    if not isinstance(value, dict):
        raise ParseError("expected a JSON object", line=lineno)
    return value
