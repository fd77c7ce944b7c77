"""Ground-truth feature maps synthesized from boundary polylines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from roadsnake.fields import FeatureMaps, Polyline
from roadsnake.raster import (
    euclidean_dt,
    nearest_foreground,
    rasterize_segments,
    rasterize_to_mask,
    round_half_up,
    sobel_gradient,
)


@dataclass(frozen=True)
class GtConfig:
    dt_truncation_radius: float = 30.0
    endpoint_sigma: float = 8.0
    dilated_normal_radius: float = 16.0

    def __post_init__(self):
        for name in ("dt_truncation_radius", "endpoint_sigma", "dilated_normal_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _boundary_mask(boundaries, w: int, h: int) -> np.ndarray:
    if not boundaries:
        raise ValueError("at least one boundary is required")
    mask = rasterize_to_mask(boundaries, w, h)
    if not mask.any():
        raise ValueError("no boundary pixel falls inside the frame")
    return mask


def detection_map(boundaries, w: int, h: int, cfg: GtConfig = GtConfig()) -> np.ndarray:
    """Inverse truncated distance transform: 1 on boundary pixels, linear to 0 at the radius."""
    d = euclidean_dt(_boundary_mask(boundaries, w, h))
    return np.maximum(0.0, 1.0 - d / cfg.dt_truncation_radius)


def gaussian_bumps(centers, w: int, h: int, sigma: float) -> np.ndarray:
    """Max-combined unnormalized Gaussians centred on the given pixel positions."""
    out = np.zeros((h, w))
    yy, xx = np.indices((h, w), dtype=np.float64)
    for cx, cy in centers:
        d2 = (xx - cx) ** 2 + (yy - cy) ** 2
        np.maximum(out, np.exp(-d2 / (2.0 * sigma * sigma)), out=out)
    return out


def endpoint_centers(boundaries) -> list:
    centers = []
    for p in boundaries:
        for v in (p.vertices[0], p.vertices[-1]):
            cx, cy = round_half_up(v)
            centers.append((int(cx), int(cy)))
    return centers


def endpoint_heatmap(boundaries, w: int, h: int, cfg: GtConfig = GtConfig()) -> np.ndarray:
    if not boundaries:
        raise ValueError("at least one boundary is required")
    return gaussian_bumps(endpoint_centers(boundaries), w, h, cfg.endpoint_sigma)


def normalize_vectors(v: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    mag = np.hypot(v[0], v[1])
    out = np.zeros_like(v)
    ok = mag >= eps
    out[:, ok] = v[:, ok] / mag[ok]
    return out


def _segment_index(boundaries, w: int, h: int):
    """Per boundary pixel: owning polyline and segment (last writer wins), -1 elsewhere."""
    owner = np.full((h, w), -1, dtype=np.int64)
    seg = np.full((h, w), -1, dtype=np.int64)
    for i, p in enumerate(boundaries):
        for px, k in rasterize_segments(p):
            ok = (px[:, 0] >= 0) & (px[:, 0] < w) & (px[:, 1] >= 0) & (px[:, 1] < h)
            owner[px[ok, 1], px[ok, 0]] = i
            seg[px[ok, 1], px[ok, 0]] = k
    return owner, seg


def _point_segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def boundary_distance(boundaries, w: int, h: int) -> np.ndarray:
    """Sub-pixel distance to the boundary geometry.

    The nearest rasterized pixel selects the owning polyline; the distance is
    then measured exactly to that pixel's segment and its two neighbours.
    """
    mask = _boundary_mask(boundaries, w, h)
    owner, seg = _segment_index(boundaries, w, h)
    _, iy, ix = nearest_foreground(mask)
    own = owner[iy, ix]
    k = seg[iy, ix]
    yy, xx = np.indices((h, w), dtype=np.float64)
    best = np.full((h, w), np.inf)
    for i, p in enumerate(boundaries):
        sel = own == i
        if not sel.any():
            continue
        v = p.vertices
        nseg = len(v) - 1
        for off in (-1, 0, 1):
            kk = np.clip(k[sel] + off, 0, nseg - 1)
            d = _point_segment_distance(xx[sel], yy[sel], v[kk, 0], v[kk, 1], v[kk + 1, 0], v[kk + 1, 1])
            best[sel] = np.minimum(best[sel], d)
    return best


_DIRECTION_PAD = 2


def _extend_at_frame(p: Polyline, w: int, h: int, length: float, tol: float = 1.0) -> Polyline:
    """Prolong ends that touch the frame along their end segment.

    A boundary clipped by the frame continues beyond it.  Letting the
    distance field see that continuation keeps the Sobel stencil on the
    outermost pixel rows from reading replicated, skewed values.
    """
    v = p.vertices

    def on_frame(q):
        return q[0] <= tol or q[1] <= tol or q[0] >= w - 1 - tol or q[1] >= h - 1 - tol

    def prolong(end, inner):
        t = end - inner
        return end + length * t / np.hypot(t[0], t[1])

    pts = [v]
    if on_frame(v[0]):
        pts.insert(0, prolong(v[0], v[1])[None])
    if on_frame(v[-1]):
        pts.append(prolong(v[-1], v[-2])[None])
    return Polyline(np.concatenate(pts)) if len(pts) > 1 else p


def direction_map(boundaries, w: int, h: int, cfg: GtConfig = GtConfig()) -> np.ndarray:
    """Unit vectors pointing toward the closest boundary, (0, 0) where undefined.

    Built as the normalized, negated Sobel gradient of the boundary distance
    field.  The distance is measured to the polyline geometry rather than to
    its staircase pixels, which keeps the normals true on slanted boundaries.
    The Sobel runs on the squared distance: its gradient ``2 d grad(d)`` has
    the same direction wherever ``d`` is smooth, but it has no kink on the
    boundary itself, so pixels straddling a curb still get its normal.
    """
    pad = _DIRECTION_PAD
    grown = [_extend_at_frame(p, w, h, pad + 2.0).vertices + pad for p in boundaries]
    d = boundary_distance([Polyline(v) for v in grown], w + 2 * pad, h + 2 * pad)
    return normalize_vectors(-sobel_gradient(d * d))[:, pad:-pad, pad:-pad]


def dilated_normals(boundaries, w: int, h: int, cfg: GtConfig = GtConfig()) -> np.ndarray:
    """Nearest boundary pixel's normal inside the dilation band, oriented toward the boundary."""
    mask = _boundary_mask(boundaries, w, h)
    tangent = np.zeros((2, h, w))
    for p in boundaries:
        for px, k in rasterize_segments(p):
            ok = (px[:, 0] >= 0) & (px[:, 0] < w) & (px[:, 1] >= 0) & (px[:, 1] < h)
            t = p.vertices[k + 1] - p.vertices[k]
            t = t / np.hypot(*t)
            tangent[0, px[ok, 1], px[ok, 0]] = t[0]
            tangent[1, px[ok, 1], px[ok, 0]] = t[1]
    d, iy, ix = nearest_foreground(mask)
    band = d <= cfg.dilated_normal_radius
    nx = -tangent[1, iy, ix]
    ny = tangent[0, iy, ix]
    yy, xx = np.indices((h, w))
    flip = (nx * (ix - xx) + ny * (iy - yy)) < 0
    nx = np.where(flip, -nx, nx)
    ny = np.where(flip, -ny, ny)
    return np.where(band, np.stack([nx, ny]), 0.0)


def gt_features(boundaries, w: int, h: int, cfg: GtConfig = GtConfig()) -> FeatureMaps:
    return FeatureMaps(
        detection=detection_map(boundaries, w, h, cfg),
        endpoints=endpoint_heatmap(boundaries, w, h, cfg),
        direction=direction_map(boundaries, w, h, cfg),
    )
