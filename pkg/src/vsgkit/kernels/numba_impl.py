"""Numba-accelerated kernels. Contracts match numpy_impl exactly."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _erode_u8(m, radius):
    h, w = m.shape
    tmp = np.zeros((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            v = np.uint8(1)
            for dx in range(-radius, radius + 1):
                xx = x + dx
                if xx < 0 or xx >= w or m[y, xx] == 0:
                    v = np.uint8(0)
                    break
            tmp[y, x] = v
    out = np.zeros((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            v = np.uint8(1)
            for dy in range(-radius, radius + 1):
                yy = y + dy
                if yy < 0 or yy >= h or tmp[yy, x] == 0:
                    v = np.uint8(0)
                    break
            out[y, x] = v
    return out


@njit(cache=True)
def _dilate_u8(m, radius):
    h, w = m.shape
    tmp = np.zeros((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            v = np.uint8(0)
            for dx in range(-radius, radius + 1):
                xx = x + dx
                if 0 <= xx < w and m[y, xx] != 0:
                    v = np.uint8(1)
                    break
            tmp[y, x] = v
    out = np.zeros((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            v = np.uint8(0)
            for dy in range(-radius, radius + 1):
                yy = y + dy
                if 0 <= yy < h and tmp[yy, x] != 0:
                    v = np.uint8(1)
                    break
            out[y, x] = v
    return out


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def _label_u8(m):
    h, w = m.shape
    labels = np.zeros((h, w), np.int64)
    parent = np.zeros(h * w // 2 + 2, np.int64)
    nxt = 1
    for y in range(h):
        for x in range(w):
            if m[y, x] == 0:
                continue
            up = labels[y - 1, x] if y > 0 else 0
            left = labels[y, x - 1] if x > 0 else 0
            if up == 0 and left == 0:
                parent[nxt] = nxt
                labels[y, x] = nxt
                nxt += 1
            elif up == 0:
                labels[y, x] = _find(parent, left)
            elif left == 0:
                labels[y, x] = _find(parent, up)
            else:
                ru = _find(parent, up)
                rl = _find(parent, left)
                if ru < rl:
                    parent[rl] = ru
                    labels[y, x] = ru
                else:
                    parent[ru] = rl
                    labels[y, x] = rl
    out = np.zeros((h, w), np.int32)
    remap = np.zeros(nxt, np.int32)
    count = 0
    for y in range(h):
        for x in range(w):
            if labels[y, x] == 0:
                continue
            r = _find(parent, labels[y, x])
            if remap[r] == 0:
                count += 1
                remap[r] = count
            out[y, x] = remap[r]
    return out


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    if radius <= 0:
        return m.astype(bool)
    return _erode_u8(m, radius).astype(bool)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    if radius <= 0:
        return m.astype(bool)
    return _dilate_u8(m, radius).astype(bool)


def label_components(mask: np.ndarray) -> np.ndarray:
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    if m.size == 0:
        return np.zeros(m.shape, dtype=np.int32)
    return _label_u8(m)
