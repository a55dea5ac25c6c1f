"""Backend equivalence: the numba kernels must match the numpy fallback."""

from __future__ import annotations

import numpy as np
import pytest

from vsgkit.kernels import numpy_impl

numba_impl = pytest.importorskip("vsgkit.kernels.numba_impl")


def _random_masks(seed: int, count: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        h = int(rng.integers(1, 40))
        w = int(rng.integers(1, 40))
        yield rng.random((h, w)) < rng.uniform(0.2, 0.8)


@pytest.mark.parametrize("radius", [0, 1, 2, 3])
def test_erode_matches(radius):
    for mask in _random_masks(11 + radius, 25):
        a = numpy_impl.erode(mask, radius)
        b = numba_impl.erode(mask, radius)
        assert np.array_equal(a, b)


@pytest.mark.parametrize("radius", [0, 1, 2, 3])
def test_dilate_matches(radius):
    for mask in _random_masks(17 + radius, 25):
        a = numpy_impl.dilate(mask, radius)
        b = numba_impl.dilate(mask, radius)
        assert np.array_equal(a, b)


def test_label_components_match_exactly():
    for mask in _random_masks(23, 40):
        a = numpy_impl.label_components(mask)
        b = numba_impl.label_components(mask)
        assert np.array_equal(a, b)


def test_label_numbering_is_first_pixel_order():
    mask = np.array(
        [
            [0, 1, 0, 1],
            [0, 1, 0, 1],
            [0, 0, 0, 0],
            [1, 0, 0, 0],
        ],
        dtype=bool,
    )
    for impl in (numpy_impl, numba_impl):
        labels = impl.label_components(mask)
        assert labels[0, 1] == 1
        assert labels[0, 3] == 2
        assert labels[3, 0] == 3


def test_label_snake_component():
    # Serpentine single component exercises union-find merging.
    mask = np.array(
        [
            [1, 1, 1, 1, 1],
            [0, 0, 0, 0, 1],
            [1, 1, 1, 1, 1],
            [1, 0, 0, 0, 0],
            [1, 1, 1, 1, 1],
        ],
        dtype=bool,
    )
    for impl in (numpy_impl, numba_impl):
        labels = impl.label_components(mask)
        assert labels[mask].max() == labels[mask].min() == 1


def test_empty_and_degenerate_shapes():
    for impl in (numpy_impl, numba_impl):
        assert impl.label_components(np.zeros((3, 3), dtype=bool)).max() == 0
        assert impl.label_components(np.zeros((0, 5), dtype=bool)).shape == (0, 5)
        assert impl.erode(np.ones((1, 1), dtype=bool), 1).tolist() == [[False]]
        assert impl.dilate(np.zeros((2, 2), dtype=bool), 2).tolist() == [[False, False], [False, False]]
