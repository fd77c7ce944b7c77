"""Convolutional-snake style polyline tracer.

Each endpoint maximum seeds one trace.  At every step a rotated ROI is
cropped ahead of the current vertex, a scorer turns it into a score map, and
the argmax becomes the next vertex.  The heading follows the direction map
rotated by 90 degrees, keeping the sign that continues the previous heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from roadsnake.fields import FeatureMaps, Polyline
from roadsnake.raster import local_maxima, round_half_up
from roadsnake.roi import RoiPatch, RoiPose, anchor_of, crop_rotated, patch_to_global

VertexScorer = Callable[[RoiPatch], np.ndarray]


@dataclass(frozen=True)
class TraceConfig:
    roi_size: int = 64
    step_cap: int = 400
    endpoint_min_value: float = 0.3
    endpoint_nms_radius: int = 16
    seed_jitter: float = 16.0
    extra_steps: int = 5
    # how far to look for a defined direction when the nearest pixel is (0, 0)
    direction_lookup_radius: float = 3.0
    min_progress: float = 0.5
    # a vertex this close to the frame edge, reached moving outward, ends the trace
    border_margin: float = 1.0

    def __post_init__(self):
        if self.roi_size < 8 or self.roi_size % 2:
            raise ValueError("roi_size must be even and >= 8")
        if self.step_cap < 1 or self.endpoint_nms_radius < 1:
            raise ValueError("step_cap and endpoint_nms_radius must be positive")
        if not 0.0 < self.endpoint_min_value < 1.0:
            raise ValueError("endpoint_min_value must lie in (0, 1)")


@dataclass
class TraceState:
    vertices: list
    direction: tuple
    steps: int = 0

    @property
    def vertex(self) -> tuple:
        return self.vertices[-1]


def detection_prior_score(patch: RoiPatch, lateral_sigma: Optional[float] = None) -> np.ndarray:
    """Detection channel weighted by a forward Gaussian prior.

    The prior peaks a quarter patch ahead of the anchor (sigma ``size/8``).
    A lateral factor (sigma ``size/4`` by default) prefers the ridge nearest
    the anchor row.  It breaks ties between equally strong ridges and keeps
    a trace from hopping onto a neighbouring curb where its own ridge runs
    into the frame edge.
    """
    size = patch.size
    ua, va = anchor_of(size)
    u_target = ua + size / 4.0
    s_u = size / 8.0
    s_v = size / 4.0 if lateral_sigma is None else lateral_sigma
    u = np.arange(size, dtype=np.float64)
    prior_u = np.exp(-((u - u_target) ** 2) / (2.0 * s_u * s_u))
    prior_v = np.exp(-((u - va) ** 2) / (2.0 * s_v * s_v)) if s_v > 0 else np.ones(size)
    return patch.detection * prior_v[:, None] * prior_u[None, :]


def _inside(features: FeatureMaps, x: float, y: float) -> bool:
    return 0.0 <= x <= features.width - 1 and 0.0 <= y <= features.height - 1


def exits_frame(features: FeatureMaps, prev, new, margin: float) -> bool:
    """True when ``new`` sits on the frame border and was reached moving outward."""
    h, w = features.shape
    dx, dy = new[0] - prev[0], new[1] - prev[1]
    return (
        (new[0] <= margin and dx < 0)
        or (new[0] >= w - 1 - margin and dx > 0)
        or (new[1] <= margin and dy < 0)
        or (new[1] >= h - 1 - margin and dy > 0)
    )


def lookup_direction(features: FeatureMaps, point, radius: float) -> Optional[np.ndarray]:
    """Direction vector at the nearest pixel, or at the nearest defined one within ``radius``."""
    h, w = features.shape
    px, py = round_half_up(point)
    px = int(min(max(px, 0), w - 1))
    py = int(min(max(py, 0), h - 1))
    d = features.direction[:, py, px]
    if d[0] != 0.0 or d[1] != 0.0:
        return d.copy()
    lut = features.nonzero_direction_index()
    if lut is None:
        return None
    dist, (iy, ix) = lut
    if dist[py, px] > radius:
        return None
    return features.direction[:, iy[py, px], ix[py, px]].copy()


def _tangents(d: np.ndarray):
    n = math.hypot(d[0], d[1])
    t = np.array([-d[1], d[0]]) / n
    return t, -t


def inward_vector(features: FeatureMaps, point) -> np.ndarray:
    """Sum of inward normals of the image borders nearest to ``point``."""
    x, y = float(point[0]), float(point[1])
    h, w = features.shape
    dists = [x, (w - 1) - x, y, (h - 1) - y]
    normals = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
    m = min(dists)
    v = np.zeros(2)
    for d, n in zip(dists, normals):
        if d == m:
            v += n
    return v


def seed_endpoints(features: FeatureMaps, cfg: TraceConfig = TraceConfig()) -> list:
    """Endpoint maxima paired with an initial heading pointing away from the image border."""
    seeds = []
    for x, y in local_maxima(features.endpoints, cfg.endpoint_min_value, cfg.endpoint_nms_radius):
        d = lookup_direction(features, (x, y), cfg.direction_lookup_radius)
        if d is None:
            continue
        a, b = _tangents(d)
        inward = inward_vector(features, (x, y))
        heading = a if a @ inward >= b @ inward else b
        seeds.append(((float(x), float(y)), (float(heading[0]), float(heading[1]))))
    return seeds


def step(state: TraceState, features: FeatureMaps, scorer: VertexScorer = detection_prior_score,
         cfg: TraceConfig = TraceConfig()):
    """Advance one vertex.  Returns ``(vertex, direction)`` or ``None`` when the trace ends."""
    if len(state.vertices) >= cfg.step_cap:
        return None
    cx, cy = state.vertex
    hx, hy = state.direction
    patch = crop_rotated(features, RoiPose((cx, cy), math.atan2(hy, hx)), cfg.roi_size)
    score = np.asarray(scorer(patch))
    if score.shape != (cfg.roi_size, cfg.roi_size) or not np.all(np.isfinite(score)):
        raise ValueError("scorer must return a finite map of the patch size")
    v, u = divmod(int(np.argmax(score)), cfg.roi_size)
    nx, ny = patch_to_global(patch, (u, v))
    if not _inside(features, nx, ny):
        return None
    if (nx - cx) * hx + (ny - cy) * hy < cfg.min_progress:
        return None
    heading = np.array([hx, hy])
    d = lookup_direction(features, (nx, ny), cfg.direction_lookup_radius)
    if d is not None:
        a, _ = _tangents(d)
        dot = float(a @ heading)
        if dot > 0:
            heading = a
        elif dot < 0:
            heading = -a
    return (nx, ny), (float(heading[0]), float(heading[1]))


def trace(features: FeatureMaps, seed, scorer: VertexScorer = detection_prior_score,
          cfg: TraceConfig = TraceConfig()) -> Optional[Polyline]:
    """Follow one boundary from ``seed``; ``None`` if no step could be taken."""
    point, direction = seed
    n = math.hypot(*direction)
    state = TraceState([tuple(map(float, point))], (direction[0] / n, direction[1] / n))
    while True:
        nxt = step(state, features, scorer, cfg)
        if nxt is None:
            break
        prev = state.vertex
        state.vertices.append(nxt[0])
        state.direction = nxt[1]
        state.steps += 1
        if exits_frame(features, prev, nxt[0], cfg.border_margin):
            break
    if len(state.vertices) < 2:
        return None
    return Polyline.from_points(state.vertices)


def trace_all(features: FeatureMaps, scorer: VertexScorer = detection_prior_score,
              cfg: TraceConfig = TraceConfig()) -> list:
    out = []
    for seed in seed_endpoints(features, cfg):
        p = trace(features, seed, scorer, cfg)
        if p is not None and len(p) >= 2:
            out.append(p)
    return out


def step_budget(boundary_length: float, cfg: TraceConfig = TraceConfig()) -> int:
    """Vertex budget for a boundary of known length: nominal steps plus ``extra_steps``."""
    return int(math.ceil(boundary_length / (cfg.roi_size / 4.0))) + 1 + cfg.extra_steps


def jitter_seeds(seeds, jitter: float, rng: np.random.Generator) -> list:
    """Uniform +/- ``jitter`` perturbation of seed positions (headings untouched)."""
    out = []
    for (x, y), d in seeds:
        dx, dy = rng.uniform(-jitter, jitter, size=2)
        out.append(((x + float(dx), y + float(dy)), d))
    return out
