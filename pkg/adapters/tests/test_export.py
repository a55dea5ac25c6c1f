"""Proposal export: wire-format conformance checked by the primary parser."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from vsg_adapters import AdapterError
from vsg_adapters.export import AdapterConfig, export_proposals, main

# Conformance is judged by the primary toolkit's own parser.
from vsgkit.core import read_mask_video

CLIP = {
    "width": 48,
    "height": 32,
    "fps": 1.0,
    "frames": [
        [
            {"kind": "rectangle", "x": 4, "y": 4, "w": 16, "h": 10},
            {"kind": "disk", "x": 34, "y": 20, "r": 6},
        ],
        [
            {"kind": "rectangle", "x": 6, "y": 4, "w": 16, "h": 10},
            {"kind": "disk", "x": 34, "y": 20, "r": 6},
        ],
        [
            {"kind": "rectangle", "x": 8, "y": 4, "w": 16, "h": 10},
        ],
    ],
}


def _write_clip(tmp_path: Path, clip=CLIP) -> Path:
    path = tmp_path / "clip.json"
    path.write_text(json.dumps(clip))
    return path


def test_export_passes_primary_side_validation(tmp_path):
    clip = _write_clip(tmp_path)
    out = tmp_path / "proposals.jsonl"
    export_proposals(str(clip), AdapterConfig(output_path=str(out)))
    video = read_mask_video(out)  # primary-side parse enforces every invariant
    assert video.width == 48 and video.height == 32
    assert video.n_frames == 3
    frames = dict(video.frames)
    assert set(frames) == {0, 1, 2}


def test_proposal_count_covers_frame_zero_objects(tmp_path):
    clip = _write_clip(tmp_path)
    out = tmp_path / "proposals.jsonl"
    export_proposals(str(clip), AdapterConfig(output_path=str(out)))
    video = read_mask_video(out)
    # two objects plus the background region in frame 0
    assert len(video.masks_at(0)) >= len(CLIP["frames"][0])


def test_proposals_tile_the_frame(tmp_path):
    clip = _write_clip(tmp_path)
    out = tmp_path / "proposals.jsonl"
    export_proposals(str(clip), AdapterConfig(output_path=str(out)))
    video = read_mask_video(out)
    for frame, masks in video.frames:
        acc = np.zeros((32, 48), dtype=int)
        for mask in masks.values():
            acc += mask.to_array()
        assert np.all(acc == 1), f"frame {frame} proposals must tile the frame"


def test_empty_video_yields_header_only_file(tmp_path):
    clip = _write_clip(tmp_path, {"width": 8, "height": 8, "fps": 2.0, "frames": []})
    out = tmp_path / "empty.jsonl"
    export_proposals(str(clip), AdapterConfig(output_path=str(out)))
    lines = out.read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0]) == {"width": 8, "height": 8, "fps": 2.0, "n_frames": 0}
    video = read_mask_video(out)
    assert video.frames == ()


def test_sampling_rate_strides_frames(tmp_path):
    clip_doc = dict(CLIP, fps=2.0)
    clip = _write_clip(tmp_path, clip_doc)
    out = tmp_path / "sampled.jsonl"
    export_proposals(str(clip), AdapterConfig(sample_fps=1.0, output_path=str(out)))
    video = read_mask_video(out)
    assert [f for f, _ in video.frames] == [0, 2]


def test_export_is_deterministic(tmp_path):
    clip = _write_clip(tmp_path)
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    export_proposals(str(clip), AdapterConfig(output_path=str(a)))
    export_proposals(str(clip), AdapterConfig(output_path=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_small_region_needs_fine_grid(tmp_path):
    clip_doc = {
        "width": 64,
        "height": 64,
        "fps": 1.0,
        "frames": [[{"kind": "rectangle", "x": 30, "y": 30, "w": 2, "h": 2}]],
    }
    clip = _write_clip(tmp_path, clip_doc)
    coarse = tmp_path / "coarse.jsonl"
    export_proposals(
        str(clip), AdapterConfig(grid_sizes=(4,), output_path=str(coarse))
    )
    assert len(read_mask_video(coarse).masks_at(0)) == 1  # background only
    fine = tmp_path / "fine.jsonl"
    export_proposals(str(clip), AdapterConfig(grid_sizes=(32,), output_path=str(fine)))
    assert len(read_mask_video(fine).masks_at(0)) == 2


def test_unknown_model_raises(tmp_path):
    clip = _write_clip(tmp_path)
    with pytest.raises(AdapterError):
        export_proposals(str(clip), AdapterConfig(model="sam2-hiera-large"))


def test_missing_clip_raises(tmp_path):
    with pytest.raises(AdapterError):
        export_proposals(str(tmp_path / "nope.json"), AdapterConfig())


def test_cli_entry_point(tmp_path, capsys):
    clip = _write_clip(tmp_path)
    out = tmp_path / "cli.jsonl"
    assert main(["--video", str(clip), "--out", str(out), "--grids", "16,4"]) == 0
    read_mask_video(out)
    assert main(["--video", str(clip), "--out", str(out), "--model", "hosted"]) == 2
    record = json.loads(capsys.readouterr().out.strip())
    assert record["error"]["type"] == "AdapterError"
