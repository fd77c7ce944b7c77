"""Dense raster primitives shared by every stage of the pipeline."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from roadsnake.fields import Polyline, as_mask, as_scalar_field


def bilinear_sample_many(field: np.ndarray, xs, ys) -> np.ndarray:
    """Bilinear interpolation at arbitrary points; pixels beyond the grid count as 0."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    h, w = field.shape
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    out = np.zeros(np.broadcast(xs, ys).shape, dtype=np.float64)
    for dx, dy, wgt in (
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = x0 + dx
        yi = y0 + dy
        ok = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        vals = np.zeros_like(out)
        vals[ok] = field[yi[ok], xi[ok]]
        out += vals * wgt
    return out


def bilinear_sample(field: np.ndarray, x: float, y: float) -> float:
    return float(bilinear_sample_many(field, np.array([x]), np.array([y]))[0])


def squared_dt(mask: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest foreground pixel (int64)."""
    mask = as_mask(mask)
    if not mask.any():
        raise ValueError("no foreground")
    _, (iy, ix) = ndimage.distance_transform_edt(~mask, return_indices=True)
    yy, xx = np.indices(mask.shape)
    return (iy - yy) ** 2 + (ix - xx) ** 2


def euclidean_dt(mask: np.ndarray) -> np.ndarray:
    return np.sqrt(squared_dt(mask).astype(np.float64))


def nearest_foreground(mask: np.ndarray):
    """Distance to and (row, col) index arrays of each pixel's nearest foreground pixel."""
    mask = as_mask(mask)
    if not mask.any():
        raise ValueError("no foreground")
    _, (iy, ix) = ndimage.distance_transform_edt(~mask, return_indices=True)
    yy, xx = np.indices(mask.shape)
    d = np.sqrt(((iy - yy) ** 2 + (ix - xx) ** 2).astype(np.float64))
    return d, iy, ix


def sobel_gradient(field: np.ndarray) -> np.ndarray:
    """3x3 Sobel derivatives with replicate padding, returned as a (2, H, W) field."""
    field = as_scalar_field(field)
    if field.shape[0] < 3 or field.shape[1] < 3:
        raise ValueError(f"sobel needs a field of at least 3x3, got {field.shape[1]}x{field.shape[0]}")
    p = np.pad(field, 1, mode="edge")
    # smoothing [1,2,1] across, central difference along
    rows = p[:-2, :] + 2.0 * p[1:-1, :] + p[2:, :]
    gx = rows[:, 2:] - rows[:, :-2]
    cols = p[:, :-2] + 2.0 * p[:, 1:-1] + p[:, 2:]
    gy = cols[2:, :] - cols[:-2, :]
    return np.stack([gx, gy])


def _bresenham(x0: int, y0: int, x1: int, y1: int):
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def round_half_up(v) -> np.ndarray:
    return np.floor(np.asarray(v, dtype=np.float64) + 0.5).astype(np.int64)


def rasterize_polyline(p: Polyline) -> np.ndarray:
    """Unique pixels (x, y) of the Bresenham rasterization, sorted row-major."""
    pts = round_half_up(p.vertices)
    seen = set()
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        seen.update(_bresenham(int(x0), int(y0), int(x1), int(y1)))
    out = np.array(sorted(seen, key=lambda q: (q[1], q[0])), dtype=np.int64)
    return out.reshape(-1, 2)


def rasterize_segments(p: Polyline):
    """Yield ``(pixels, segment_index)`` per consecutive vertex pair, duplicates kept."""
    pts = round_half_up(p.vertices)
    for k, ((x0, y0), (x1, y1)) in enumerate(zip(pts[:-1], pts[1:])):
        yield np.array(list(_bresenham(int(x0), int(y0), int(x1), int(y1))), dtype=np.int64), k


def rasterize_to_mask(polylines, width: int, height: int) -> np.ndarray:
    """Burn polylines into a mask; pixels outside the frame are clipped."""
    mask = np.zeros((height, width), dtype=bool)
    for p in polylines:
        px = rasterize_polyline(p)
        ok = (px[:, 0] >= 0) & (px[:, 0] < width) & (px[:, 1] >= 0) & (px[:, 1] < height)
        mask[px[ok, 1], px[ok, 0]] = True
    return mask


def local_maxima(field: np.ndarray, min_value: float, nms_radius: int) -> list:
    """Greedy non-maximum suppression over a Chebyshev window.

    Candidates are pixels at least ``min_value`` that equal the maximum of
    their ``(2r+1)^2`` window.  They are visited by descending value (ties by
    row-major index) and each accepted peak suppresses candidates within
    Chebyshev distance ``r``.
    """
    if nms_radius < 1:
        raise ValueError("nms_radius must be >= 1")
    field = as_scalar_field(field)
    r = int(nms_radius)
    wmax = ndimage.maximum_filter(field, size=2 * r + 1, mode="constant", cval=-np.inf)
    cand = (field >= min_value) & (field >= wmax)
    ys, xs = np.nonzero(cand)
    if len(ys) == 0:
        return []
    vals = field[ys, xs]
    flat = ys * field.shape[1] + xs
    order = np.lexsort((flat, -vals))
    kept: list = []
    for i in order:
        x, y = int(xs[i]), int(ys[i])
        if all(max(abs(x - kx), abs(y - ky)) > r for kx, ky in kept):
            kept.append((x, y))
    return kept


def dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean dilation: on iff the nearest input pixel is within ``radius``."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    mask = as_mask(mask)
    if not mask.any():
        return mask.copy()
    return squared_dt(mask) <= radius * radius
