"""Skeleton baseline: threshold the detection map, thin it, read components as polylines."""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy import ndimage

from roadsnake.fields import Polyline, as_mask

THRESHOLD_GRID = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


def binarize(s: np.ndarray, threshold: float) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return np.asarray(s) >= threshold


def _neighbours(img: np.ndarray):
    p = np.pad(img, 1)
    c = slice(1, -1)
    n, s, w, e = slice(0, -2), slice(2, None), slice(0, -2), slice(2, None)
    # clockwise from north: P2..P9
    return [p[n, c], p[n, e], p[c, e], p[s, e], p[s, c], p[s, w], p[c, w], p[n, w]]


def skeletonize(mask: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning."""
    img = as_mask(mask).astype(np.uint8)
    while True:
        changed = False
        for first in (True, False):
            nb = _neighbours(img)
            p2, p3, p4, p5, p6, p7, p8, p9 = nb
            b = sum(x.astype(np.int32) for x in nb)
            seq = nb + [p2]
            a = sum(((seq[i] == 0) & (seq[i + 1] == 1)).astype(np.int32) for i in range(8))
            if first:
                c1 = (p2 & p4 & p6) == 0
                c2 = (p4 & p6 & p8) == 0
            else:
                c1 = (p2 & p4 & p8) == 0
                c2 = (p2 & p6 & p8) == 0
            kill = (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & c1 & c2
            if kill.any():
                img[kill] = 0
                changed = True
        if not changed:
            return img.astype(bool)


_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _bfs(start, pixels: set):
    dist = {start: 0}
    parent = {start: None}
    q = deque([start])
    while q:
        cur = q.popleft()
        y, x = cur
        for dy, dx in _OFFSETS:
            nb = (y + dy, x + dx)
            if nb in pixels and nb not in dist:
                dist[nb] = dist[cur] + 1
                parent[nb] = cur
                q.append(nb)
    return dist, parent


def _farthest(dist: dict, among) -> tuple:
    # ties go to the row-major first pixel
    return max(among, key=lambda p: (dist[p], -p[0], -p[1]))


def remove_collinear(points: np.ndarray) -> np.ndarray:
    if len(points) <= 2:
        return points
    keep = [0]
    for i in range(1, len(points) - 1):
        a, b, c = points[keep[-1]], points[i], points[i + 1]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if cross != 0:
            keep.append(i)
    keep.append(len(points) - 1)
    return points[keep]


def components_to_polylines(skeleton: np.ndarray, min_pixels: int = 3) -> list:
    """One polyline per 8-connected component, along its longest endpoint-to-endpoint path."""
    skeleton = as_mask(skeleton)
    labels, n = ndimage.label(skeleton, structure=np.ones((3, 3), dtype=int))
    out = []
    for k in range(1, n + 1):
        ys, xs = np.nonzero(labels == k)
        if len(ys) < min_pixels:
            continue
        pixels = set(zip(ys.tolist(), xs.tolist()))
        ends = [p for p in sorted(pixels)
                if sum((p[0] + dy, p[1] + dx) in pixels for dy, dx in _OFFSETS) == 1]
        candidates = ends if len(ends) >= 2 else sorted(pixels)
        dist, _ = _bfs(candidates[0], pixels)
        a = _farthest(dist, candidates)
        dist, parent = _bfs(a, pixels)
        b = _farthest(dist, candidates)
        path = []
        cur = b
        while cur is not None:
            path.append((cur[1], cur[0]))
            cur = parent[cur]
        pts = remove_collinear(np.array(path[::-1], dtype=np.float64))
        out.append(Polyline(pts))
    return out


def run_baseline(s: np.ndarray, threshold: float) -> list:
    return components_to_polylines(skeletonize(binarize(s, threshold)))


def sweep_thresholds(detections, gts_per_scene, grid=THRESHOLD_GRID, tau: float = 5.0):
    """Grid-search the binarization threshold by aggregate F1 at ``tau``.

    Returns ``(best_threshold, {threshold: f1})``.
    """
    from roadsnake.metrics import aggregate, evaluate

    table = {}
    for t in grid:
        reports = [evaluate(run_baseline(s, t), gts, (tau,)) for s, gts in zip(detections, gts_per_scene)]
        table[t] = aggregate(reports).f1[0]
    best = max(grid, key=lambda t: (table[t], -t))
    return best, table
