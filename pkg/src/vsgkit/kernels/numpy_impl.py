"""Pure-numpy kernel implementations (fallback backend).

Shared contracts:
  * masks are 2-D arrays, nonzero = foreground;
  * pixels outside the frame are background for both erosion and dilation;
  * component labels are consecutive from 1, numbered by each component's
    first pixel in row-major order, 0 = background.
"""

from __future__ import annotations

import numpy as np


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary erosion by a (2*radius+1) square, separable min filter."""
    m = np.ascontiguousarray(mask, dtype=bool)
    if radius <= 0:
        return m.copy()
    out = m.copy()
    for axis in (1, 0):
        acc = out.copy()
        for s in range(1, radius + 1):
            lo = np.zeros_like(out)
            hi = np.zeros_like(out)
            if axis == 1:
                lo[:, :-s] = out[:, s:]
                hi[:, s:] = out[:, :-s]
            else:
                lo[:-s, :] = out[s:, :]
                hi[s:, :] = out[:-s, :]
            acc &= lo
            acc &= hi
        out = acc
    return out


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation by a (2*radius+1) square, separable max filter."""
    m = np.ascontiguousarray(mask, dtype=bool)
    if radius <= 0:
        return m.copy()
    out = m.copy()
    for axis in (1, 0):
        acc = out.copy()
        for s in range(1, radius + 1):
            lo = np.zeros_like(out)
            hi = np.zeros_like(out)
            if axis == 1:
                lo[:, :-s] = out[:, s:]
                hi[:, s:] = out[:, :-s]
            else:
                lo[:-s, :] = out[s:, :]
                hi[s:, :] = out[:-s, :]
            acc |= lo
            acc |= hi
        out = acc
    return out


def label_components(mask: np.ndarray) -> np.ndarray:
    """4-connected component labeling by iterative minimum propagation."""
    m = np.ascontiguousarray(mask, dtype=bool)
    h, w = m.shape
    out = np.zeros((h, w), dtype=np.int32)
    if h == 0 or w == 0 or not m.any():
        return out
    big = np.int64(h * w + 2)
    lab = np.where(m, np.arange(1, h * w + 1, dtype=np.int64).reshape(h, w), big)
    while True:
        n = lab.copy()
        np.minimum(n[1:, :], lab[:-1, :], out=n[1:, :])
        np.minimum(n[:-1, :], lab[1:, :], out=n[:-1, :])
        np.minimum(n[:, 1:], lab[:, :-1], out=n[:, 1:])
        np.minimum(n[:, :-1], lab[:, 1:], out=n[:, :-1])
        n[~m] = big
        if np.array_equal(n, lab):
            break
        lab = n
    _, inv = np.unique(lab[m], return_inverse=True)
    out[m] = inv.astype(np.int32) + 1
    return out
