"""Procedural road scenes and feature-degradation models.

A scene is a handful of smooth roads crossing the frame.  Each road is a
clothoid-like centerline (curvature ramps linearly between random targets
under a cap); its two curbs are the +/- half-width offsets, clipped to the
frame.  Sensor-proxy rasters are rendered from the road mask.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage
from shapely.geometry import LineString, box

from roadsnake.fields import FeatureMaps, Polyline
from roadsnake.groundtruth import boundary_distance, endpoint_centers, gaussian_bumps
from roadsnake.raster import (
    dilate,
    local_maxima,
    nearest_foreground,
    rasterize_to_mask,
    sobel_gradient,
)

MIN_BOUNDARY_LENGTH = 50.0


@dataclass(frozen=True)
class SceneConfig:
    width: int = 512
    height: int = 512
    seed: int = 0
    roads: int = 2
    road_width_min: float = 40.0
    road_width_max: float = 120.0
    max_curvature: float = 0.01
    curb_height: float = 0.15
    resolution: float = 0.04
    # minimum clearance between the curbs of different roads
    min_separation: float = 48.0

    def __post_init__(self):
        if self.width < 128 or self.height < 128:
            raise ValueError("scene dimensions must be >= 128")
        if not 1 <= self.roads <= 4:
            raise ValueError("roads must be between 1 and 4")
        if not 0 < self.road_width_min <= self.road_width_max:
            raise ValueError("road width range must be positive and ordered")
        if self.road_width_max >= min(self.width, self.height) - 8:
            raise ValueError("road width does not fit in the frame")
        if self.max_curvature < 0:
            raise ValueError("max_curvature must be >= 0")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class Scene:
    config: SceneConfig
    boundaries: list
    centerlines: list
    half_widths: list
    lidar: np.ndarray
    elevation: np.ndarray
    elevation_gradient: np.ndarray
    camera: np.ndarray

    RASTERS = ("lidar", "elevation", "elevation_gradient", "camera")


def elevation_gradient(elevation: np.ndarray) -> np.ndarray:
    g = sobel_gradient(elevation)
    return np.hypot(g[0], g[1])


# geometry ---------------------------------------------------------------

def _sample_centerline(cfg: SceneConfig, rng: np.random.Generator, margin: float) -> np.ndarray:
    w, h = cfg.width - 1, cfg.height - 1
    side = int(rng.integers(4))
    t = rng.uniform(0.15, 0.85)
    start, inward = [
        ((0.0, t * h), (1.0, 0.0)),
        ((w, t * h), (-1.0, 0.0)),
        ((t * w, 0.0), (0.0, 1.0)),
        ((t * w, h), (0.0, -1.0)),
    ][side]
    theta0 = math.atan2(inward[1], inward[0]) + rng.uniform(-math.radians(35), math.radians(35))
    ds = 2.0
    x, y = start[0] - margin * math.cos(theta0), start[1] - margin * math.sin(theta0)
    theta, kappa = theta0, 0.0
    pts = [(x, y)]
    seg_left, k_target, k_rate = 0.0, 0.0, 0.0
    limit = 4.0 * (cfg.width + cfg.height)
    travelled = 0.0
    entered = False
    while travelled < limit:
        if seg_left <= 0:
            seg_left = rng.uniform(80.0, 200.0)
            k_target = rng.uniform(-cfg.max_curvature, cfg.max_curvature)
            # keep the road heading roughly inward: no U-turns
            drift = (theta - theta0 + math.pi) % (2 * math.pi) - math.pi
            if abs(drift) > math.radians(50):
                k_target = -math.copysign(abs(k_target) + 0.2 * cfg.max_curvature, drift)
                k_target = max(-cfg.max_curvature, min(cfg.max_curvature, k_target))
            k_rate = (k_target - kappa) / seg_left
        kappa += k_rate * ds
        seg_left -= ds
        theta += kappa * ds
        x += ds * math.cos(theta)
        y += ds * math.sin(theta)
        travelled += ds
        pts.append((x, y))
        inside = -margin <= x <= w + margin and -margin <= y <= h + margin
        if inside and 0 <= x <= w and 0 <= y <= h:
            entered = True
        if entered and not inside:
            break
    return np.array(pts)


def _offset(center: np.ndarray, d: float) -> np.ndarray:
    tang = np.gradient(center, axis=0)
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    normal = np.stack([-tang[:, 1], tang[:, 0]], axis=1)
    return center + d * normal


def _clip_pieces(line: np.ndarray, cfg: SceneConfig) -> list:
    frame = box(0.0, 0.0, cfg.width - 1.0, cfg.height - 1.0)
    geom = LineString(line).intersection(frame)
    parts = getattr(geom, "geoms", [geom])
    out = []
    for g in parts:
        if g.geom_type != "LineString" or g.length < MIN_BOUNDARY_LENGTH:
            continue
        coords = np.asarray(g.coords)
        # thin to ~4 px spacing, always keeping both ends
        keep = np.r_[np.arange(0, len(coords) - 1, 2), len(coords) - 1]
        out.append(Polyline.from_points(coords[np.unique(keep)]))
    return out


def curbs_of(center: np.ndarray, half_width: float, cfg: SceneConfig) -> list:
    return _clip_pieces(_offset(center, half_width), cfg) + _clip_pieces(_offset(center, -half_width), cfg)


# rendering --------------------------------------------------------------

CURB_RAMP = 3.0


def road_edge_distance(centerlines, half_widths, width: int, height: int) -> np.ndarray:
    """Signed distance to the nearest road edge: negative on the road, positive off it."""
    out = np.full((height, width), np.inf)
    for c, hw in zip(centerlines, half_widths):
        pad = int(math.ceil(hw)) + 2
        shifted = Polyline.from_points(np.asarray(c) + pad)
        d = boundary_distance([shifted], width + 2 * pad, height + 2 * pad)
        out = np.minimum(out, d[pad:pad + height, pad:pad + width] - hw)
    return out


def road_mask(centerlines, half_widths, width: int, height: int) -> np.ndarray:
    """Pixels within half a road width of any centerline."""
    return road_edge_distance(centerlines, half_widths, width, height) <= 0.0


def render(cfg: SceneConfig, edge_distance: np.ndarray, rng: np.random.Generator) -> dict:
    """Sensor proxies from the signed road-edge distance.

    Elevation climbs linearly from 0 to the curb height over a 3 px band
    centred on the curb.  Working from the sub-pixel distance instead of a
    box-filtered mask keeps the curb profile the same at every road heading.
    """
    h, w = edge_distance.shape
    on_road = edge_distance <= 0.0
    elevation = cfg.curb_height * np.clip(edge_distance / CURB_RAMP + 0.5, 0.0, 1.0)
    grad = elevation_gradient(elevation)
    texture = ndimage.gaussian_filter(rng.standard_normal((h, w)), 2.0)
    texture /= max(float(np.abs(texture).max()), 1e-12)
    lidar = np.clip(np.where(on_road, 0.30, 0.62) + 0.08 * texture + 0.5 * grad, 0.0, 1.0)
    shade = sobel_gradient(elevation)[0] * 2.0
    grain = ndimage.gaussian_filter(rng.standard_normal((h, w)), 1.0)
    camera = np.clip(np.where(on_road, 0.35, 0.68) + shade + 0.05 * grain, 0.0, 1.0)
    return {"lidar": lidar, "elevation": elevation, "elevation_gradient": grad, "camera": camera}


def make_scene(cfg: SceneConfig, centerlines, half_widths, rng=None) -> Scene:
    """Assemble a scene from explicit road centerlines and half widths."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    centerlines = [np.asarray(c, dtype=np.float64) for c in centerlines]
    boundaries = []
    for c, hw in zip(centerlines, half_widths):
        boundaries.extend(curbs_of(c, hw, cfg))
    if not boundaries:
        raise ValueError("no boundary of sufficient length inside the frame")
    edge = road_edge_distance(centerlines, half_widths, cfg.width, cfg.height)
    rasters = render(cfg, edge, rng)
    return Scene(cfg, boundaries, centerlines, list(half_widths), **rasters)


def generate_scene(cfg: SceneConfig, max_tries: int = 200) -> Scene:
    rng = np.random.default_rng(cfg.seed)
    frame = box(0.0, 0.0, cfg.width - 1.0, cfg.height - 1.0)
    centers, halves = [], []
    for _ in range(cfg.roads):
        for _ in range(max_tries):
            hw = rng.uniform(cfg.road_width_min, cfg.road_width_max) / 2.0
            c = _sample_centerline(cfg, rng, margin=cfg.road_width_max / 2.0 + 20.0)
            if len(curbs_of(c, hw, cfg)) < 2:
                continue
            line = LineString(c).intersection(frame.buffer(hw + cfg.min_separation))
            ok = all(
                line.distance(LineString(oc)) >= hw + ohw + cfg.min_separation
                for oc, ohw in zip(centers, halves)
            )
            if ok:
                centers.append(c)
                halves.append(hw)
                break
        else:
            raise ValueError(
                f"infeasible scene config: could not place {cfg.roads} roads "
                f"(widths {cfg.road_width_min}-{cfg.road_width_max}) in {cfg.width}x{cfg.height}"
            )
    return make_scene(cfg, centers, halves, rng)


# degradation ------------------------------------------------------------

@dataclass(frozen=True)
class DegradeConfig:
    blur_sigma: float = 0.0
    gap_count: int = 0
    gap_length: float = 20.0
    # lateral reach of a dropout gap around the boundary
    gap_band: float = 40.0
    noise_sigma: float = 0.0
    direction_noise_deg: float = 0.0
    endpoint_jitter: float = 16.0
    endpoint_sigma: float = 8.0
    endpoint_fp_count: int = 0
    endpoint_fn_prob: float = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"{k} must be nonnegative")
        if self.endpoint_fn_prob > 1:
            raise ValueError("endpoint_fn_prob must be <= 1")

    @classmethod
    def identity(cls) -> "DegradeConfig":
        return cls(endpoint_jitter=0.0)

    def to_json(self) -> dict:
        return asdict(self)


def _sub_polyline(p: Polyline, s0: float, s1: float) -> np.ndarray:
    v = p.vertices
    cum = np.r_[0.0, np.cumsum(np.linalg.norm(np.diff(v, axis=0), axis=1))]
    s = np.r_[s0, cum[(cum > s0) & (cum < s1)], s1]
    return np.stack([np.interp(s, cum, v[:, 0]), np.interp(s, cum, v[:, 1])], axis=1)


def _gap_mask(boundaries, cfg: DegradeConfig, shape, rng) -> np.ndarray:
    h, w = shape
    gap_px = np.zeros(shape, dtype=bool)
    margin = 40.0
    for p in boundaries:
        length = p.length
        starts: list = []
        for _ in range(cfg.gap_count):
            for _ in range(50):
                lo, hi = margin, length - margin - cfg.gap_length
                if hi <= lo:
                    break
                s = rng.uniform(lo, hi)
                if all(abs(s - t) >= cfg.gap_length + margin for t in starts):
                    starts.append(s)
                    break
        for s in sorted(starts):
            gap_px |= rasterize_to_mask([Polyline.from_points(_sub_polyline(p, s, s + cfg.gap_length))], w, h)
    if not gap_px.any():
        return gap_px
    union = rasterize_to_mask(boundaries, w, h)
    gap_px = union & dilate(gap_px, 1.0)
    d, iy, ix = nearest_foreground(union)
    return gap_px[iy, ix] & (d <= cfg.gap_band)


def degrade_features(f: FeatureMaps, cfg: DegradeConfig, seed: int, boundaries=None) -> FeatureMaps:
    """Emulate imperfect predicted features.

    Detection: blur, dropout gaps along the boundaries, additive noise, clip.
    Direction: per-pixel rotation by Gaussian angular noise.  Endpoints: bump
    centers re-drawn with uniform jitter (kept inside the frame), random
    false negatives and off-boundary false positives.  Gaps need the
    boundary polylines; endpoint centers come from them when given and from
    heatmap maxima otherwise.
    """
    r_det, r_dir, r_end = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
    h, w = f.shape

    det = f.detection.copy()
    if cfg.blur_sigma > 0:
        det = ndimage.gaussian_filter(det, cfg.blur_sigma, mode="nearest")
    if cfg.gap_count > 0:
        if boundaries is None:
            raise ValueError("dropout gaps need the boundary polylines")
        det[_gap_mask(boundaries, cfg, (h, w), r_det)] = 0.0
    if cfg.noise_sigma > 0:
        det = det + r_det.normal(0.0, cfg.noise_sigma, size=det.shape)
    det = np.clip(det, 0.0, 1.0)

    direction = f.direction.copy()
    if cfg.direction_noise_deg > 0:
        nz = np.any(direction != 0, axis=0)
        ang = np.radians(r_dir.normal(0.0, cfg.direction_noise_deg, size=int(nz.sum())))
        vx, vy = direction[0][nz], direction[1][nz]
        c, s = np.cos(ang), np.sin(ang)
        rx, ry = c * vx - s * vy, s * vx + c * vy
        n = np.hypot(rx, ry)
        direction[0][nz] = rx / n
        direction[1][nz] = ry / n

    endpoints = f.endpoints.copy()
    if cfg.endpoint_jitter > 0 or cfg.endpoint_fn_prob > 0 or cfg.endpoint_fp_count > 0:
        if boundaries is not None:
            centers = endpoint_centers(boundaries)
        else:
            centers = local_maxima(f.endpoints, 0.5, max(1, int(round(cfg.endpoint_sigma))))
        new = []
        for cx, cy in centers:
            if r_end.uniform() < cfg.endpoint_fn_prob:
                continue
            jx, jy = r_end.uniform(-cfg.endpoint_jitter, cfg.endpoint_jitter, size=2)
            new.append((min(max(round(cx + jx), 0), w - 1), min(max(round(cy + jy), 0), h - 1)))
        off = np.argwhere(f.detection < 0.05)
        if len(off):
            for i in r_end.integers(0, len(off), size=cfg.endpoint_fp_count):
                new.append((int(off[i][1]), int(off[i][0])))
        endpoints = gaussian_bumps(new, w, h, cfg.endpoint_sigma)

    return FeatureMaps(detection=det, endpoints=endpoints, direction=direction)
