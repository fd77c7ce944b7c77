"""Score-based pruning and overlap merging of traced polylines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from roadsnake.raster import bilinear_sample_many, dilate, rasterize_polyline


@dataclass(frozen=True)
class PostConfig:
    min_polyline_score: float = 0.4
    overlap_dilation_radius: float = 8.0
    overlap_threshold: float = 0.30

    def __post_init__(self):
        if not 0.0 < self.overlap_threshold < 1.0:
            raise ValueError("overlap_threshold must lie in (0, 1)")
        if self.overlap_dilation_radius < 0:
            raise ValueError("overlap_dilation_radius must be >= 0")


def score_polyline(p, detection: np.ndarray) -> float:
    """Mean detection value over the polyline's vertices."""
    vals = bilinear_sample_many(detection, p.vertices[:, 0], p.vertices[:, 1])
    return float(np.clip(vals.mean(), 0.0, 1.0))


def filter_low_score(polylines, detection: np.ndarray, cfg: PostConfig = PostConfig()) -> list:
    out = []
    for p in polylines:
        s = score_polyline(p, detection)
        if s >= cfg.min_polyline_score:
            out.append(p.with_score(s))
    return out


def overlap_fraction(pixels_a: np.ndarray, pixels_b: np.ndarray, radius: float) -> float:
    """Fraction of ``pixels_a`` inside the radius-dilation of ``pixels_b``."""
    if len(pixels_a) == 0:
        return 0.0
    r = int(np.ceil(radius))
    lo = np.minimum(pixels_a.min(axis=0), pixels_b.min(axis=0)) - r - 1
    hi = np.maximum(pixels_a.max(axis=0), pixels_b.max(axis=0)) + r + 2
    w, h = (hi - lo)
    mask = np.zeros((h, w), dtype=bool)
    mask[pixels_b[:, 1] - lo[1], pixels_b[:, 0] - lo[0]] = True
    band = dilate(mask, radius)
    return float(band[pixels_a[:, 1] - lo[1], pixels_a[:, 0] - lo[0]].mean())


def conflicts(pa, pb, cfg: PostConfig, raster_a=None, raster_b=None) -> bool:
    ra = rasterize_polyline(pa) if raster_a is None else raster_a
    rb = rasterize_polyline(pb) if raster_b is None else raster_b
    r = cfg.overlap_dilation_radius
    return (
        overlap_fraction(ra, rb, r) > cfg.overlap_threshold
        or overlap_fraction(rb, ra, r) > cfg.overlap_threshold
    )


def merge_overlaps(polylines, cfg: PostConfig = PostConfig()) -> list:
    """Keep the best polyline of every conflicting pair, greedily by score.

    Order of preference: higher score, then more rasterized pixels, then the
    row-major first vertex.  Survivors keep their input order.
    """
    polylines = list(polylines)
    if any(p.score is None for p in polylines):
        raise ValueError("merge_overlaps needs scored polylines")
    rasters = [rasterize_polyline(p) for p in polylines]

    def rank(i):
        x, y = polylines[i].vertices[0]
        return (-polylines[i].score, -len(rasters[i]), y, x, i)

    kept = []
    for i in sorted(range(len(polylines)), key=rank):
        if not any(conflicts(polylines[i], polylines[j], cfg, rasters[i], rasters[j]) for j in kept):
            kept.append(i)
    return [polylines[i] for i in sorted(kept)]


def postprocess(polylines, detection: np.ndarray, cfg: PostConfig = PostConfig()) -> list:
    return merge_overlaps(filter_low_score(polylines, detection, cfg), cfg)
