"""Shared fixtures: random masks and the synthetic tracking suite."""

from __future__ import annotations

import numpy as np
import pytest

from vsgkit import BinaryMask, SceneSpec, ShapeSpec


def random_mask(rng: np.random.Generator, width: int, height: int, density: float = 0.5) -> BinaryMask:
    return BinaryMask.from_array(rng.random((height, width)) < density)


def mask_from_rows(*rows: str) -> BinaryMask:
    """Build a mask from strings of 0/1 characters, one per row."""
    arr = np.array([[c == "1" for c in row] for row in rows])
    return BinaryMask.from_array(arr)


def background(width: int, height: int) -> ShapeSpec:
    return ShapeSpec("rectangle", (width, height), (0, 0))


def tracking_suite() -> list[SceneSpec]:
    """20 panoptic scenes: full-frame background plus foreground shapes with
    mid-video entries, occluder crossings, and early exits. Shapes are listed
    background-first then by (entry_frame, -area) so discovery order matches
    listing order under zero noise."""
    scenes: list[SceneSpec] = []

    # 6 scenes: one static resident, one mid-video entrant.
    for k in range(6):
        w, h = 64 + 4 * k, 48 + 2 * k
        n = 10 + k
        scenes.append(
            SceneSpec(
                seed=100 + k,
                n_frames=n,
                width=w,
                height=h,
                shapes=(
                    background(w, h),
                    ShapeSpec("rectangle", (18 + k, 12 + k), (4, 4)),
                    ShapeSpec("disk", 5 + k % 3, (w - 16, h - 14), (-1, 0), entry_frame=3 + k % 3),
                ),
            )
        )

    # 5 scenes: occluder sweeping across a disk (visibility dips, recovers).
    # The occluder outranks the disk by area, so it is listed first to keep
    # discovery order equal to listing order.
    for k in range(5):
        w, h = 72, 56
        n = 12
        scenes.append(
            SceneSpec(
                seed=200 + k,
                n_frames=n,
                width=w,
                height=h,
                shapes=(
                    background(w, h),
                    ShapeSpec(
                        "rectangle",
                        (10, 26 + 2 * k),
                        (2, 14),
                        (5, 0),
                        occluder=True,
                    ),
                    ShapeSpec("disk", 8, (36, 28)),
                ),
            )
        )

    # 5 scenes: an early exit plus a late entrant.
    for k in range(5):
        w, h = 80, 60
        n = 14
        scenes.append(
            SceneSpec(
                seed=300 + k,
                n_frames=n,
                width=w,
                height=h,
                shapes=(
                    background(w, h),
                    ShapeSpec("rectangle", (22, 16), (6, 6), exit_frame=7 + k % 3),
                    ShapeSpec("disk", 7, (60, 44), (0, -1), entry_frame=5 + k % 4),
                ),
            )
        )

    # 4 scenes: three foreground objects, mixed entries and motion.
    for k in range(4):
        w, h = 96, 64
        n = 16
        scenes.append(
            SceneSpec(
                seed=400 + k,
                n_frames=n,
                width=w,
                height=h,
                shapes=(
                    background(w, h),
                    ShapeSpec("rectangle", (26, 18), (4, 4), (1, 0)),
                    ShapeSpec("disk", 9, (70, 46)),
                    ShapeSpec("rectangle", (14, 14), (40, 40), (0, -1), entry_frame=6 + k),
                ),
            )
        )

    assert len(scenes) == 20
    return scenes


@pytest.fixture(scope="session")
def suite() -> list[SceneSpec]:
    return tracking_suite()
