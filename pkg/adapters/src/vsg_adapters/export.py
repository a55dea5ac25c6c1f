"""Segmentation-proposal exporter.

Runs a segmenter backend over a video at a fixed sampling rate and writes the
candidate masks in the vsgkit mask-file format. The bundled backend is a stub
that "segments" toy clip descriptors with multi-grid point prompts; real
model backends implement the same two-method protocol.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from . import AdapterError
from .wire import mask_file_lines


@dataclass(frozen=True)
class AdapterConfig:
    model: str = "stub"
    sample_fps: float = 1.0
    grid_sizes: tuple[int, ...] = (32, 16, 4)
    output_path: str = "proposals.jsonl"


@dataclass(frozen=True)
class ClipMeta:
    width: int
    height: int
    fps: float
    n_frames: int


class SegmenterBackend(Protocol):
    def open(self, video_path: str) -> ClipMeta: ...

    def masks_for_frame(self, frame_index: int) -> list[np.ndarray]: ...


class StubSegmenter:
    """Desk-scale stand-in: reads a clip descriptor JSON
    {"width", "height", "fps", "frames": [[region, ...], ...]} where a region
    is {"kind": "rectangle", x, y, w, h} or {"kind": "disk", x, y, r}, and
    proposes the region (or background) mask under every grid point."""

    def __init__(self, grid_sizes: tuple[int, ...] = (32, 16, 4)):
        self._grids = grid_sizes
        self._meta: ClipMeta | None = None
        self._frames: list[list[dict]] = []

    def open(self, video_path: str) -> ClipMeta:
        try:
            doc = json.loads(Path(video_path).read_text(encoding="utf-8"))
            frames = doc.get("frames", [])
            self._meta = ClipMeta(
                width=int(doc["width"]),
                height=int(doc["height"]),
                fps=float(doc.get("fps", 1.0)),
                n_frames=len(frames),
            )
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise AdapterError(f"cannot open clip {video_path}: {exc}") from exc
        self._frames = frames
        return self._meta

    def _owner_map(self, regions: list[dict]) -> np.ndarray:
        assert self._meta is not None
        owner = np.zeros((self._meta.height, self._meta.width), dtype=np.int32)
        for index, region in enumerate(regions, start=1):
            if region["kind"] == "rectangle":
                x, y = int(region["x"]), int(region["y"])
                w, h = int(region["w"]), int(region["h"])
                owner[max(y, 0) : y + h, max(x, 0) : x + w] = index
            elif region["kind"] == "disk":
                ys, xs = np.ogrid[: self._meta.height, : self._meta.width]
                hit = (xs - int(region["x"])) ** 2 + (ys - int(region["y"])) ** 2 <= int(region["r"]) ** 2
                owner[hit] = index
            else:
                raise AdapterError(f"unknown region kind {region['kind']!r}")
        return owner

    def masks_for_frame(self, frame_index: int) -> list[np.ndarray]:
        assert self._meta is not None
        owner = self._owner_map(self._frames[frame_index])
        proposals: list[np.ndarray] = []
        seen: set[int] = set()
        for grid in self._grids:
            for j in range(grid):
                for i in range(grid):
                    px = min(self._meta.width - 1, int((i + 0.5) * self._meta.width / grid))
                    py = min(self._meta.height - 1, int((j + 0.5) * self._meta.height / grid))
                    region = int(owner[py, px])
                    if region in seen:
                        continue
                    seen.add(region)
                    proposals.append(owner == region)
        return proposals


def make_backend(config: AdapterConfig) -> SegmenterBackend:
    if config.model == "stub":
        return StubSegmenter(config.grid_sizes)
    raise AdapterError(
        f"model {config.model!r} is not bundled; provide a SegmenterBackend"
    )


def export_proposals(
    video_path: str, config: AdapterConfig, backend: SegmenterBackend | None = None
) -> Path:
    """Write per-frame candidate masks for the sampled frames; returns the
    output path. Output is bit-exact mask-file format and deterministic for
    fixed backend behavior and config."""
    if backend is None:
        backend = make_backend(config)
    meta = backend.open(video_path)
    if config.sample_fps <= 0:
        raise AdapterError(f"sample_fps must be positive, got {config.sample_fps}")
    stride = max(1, int(round(meta.fps / config.sample_fps)))
    masks_by_frame: dict[int, list[np.ndarray]] = {}
    for frame in range(0, meta.n_frames, stride):
        masks = backend.masks_for_frame(frame)
        if masks:
            masks_by_frame[frame] = masks
    out = Path(config.output_path)
    with out.open("w", encoding="utf-8") as fh:
        for line in mask_file_lines(
            meta.width, meta.height, meta.fps, meta.n_frames, masks_by_frame
        ):
            fh.write(line)
            fh.write("\n")
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Export segmentation proposals to the vsgkit mask-file format.")
    parser.add_argument("--video", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--model", default="stub")
    parser.add_argument("--sample-fps", type=float, default=1.0, dest="sample_fps")
    parser.add_argument("--grids", default="32,16,4")
    args = parser.parse_args(argv)
    config = AdapterConfig(
        model=args.model,
        sample_fps=args.sample_fps,
        grid_sizes=tuple(int(g) for g in args.grids.split(",")),
        output_path=args.out,
    )
    try:
        export_proposals(args.video, config)
    except AdapterError as exc:
        print(json.dumps({"error": {"type": "AdapterError", "message": str(exc)}}))
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
