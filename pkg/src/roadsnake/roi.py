"""Rotated region-of-interest crops over stacked feature maps.

Patch pixel ``(u, v)`` lives at array index ``[v, u]``.  The ``+u`` axis
points along the direction of travel and ``+v`` is the travel direction
rotated by +90 degrees in image coordinates (so at angle 0 the patch is an
axis-aligned window).  The pose center sits at local ``(size/4, size/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from roadsnake.fields import FeatureMaps
from roadsnake.raster import bilinear_sample_many


@dataclass(frozen=True)
class RoiPose:
    center: tuple
    angle: float

    def __post_init__(self):
        if not (math.isfinite(self.center[0]) and math.isfinite(self.center[1]) and math.isfinite(self.angle)):
            raise ValueError("pose must be finite")


@dataclass(eq=False)
class RoiPatch:
    size: int
    detection: np.ndarray
    dir_x: np.ndarray
    dir_y: np.ndarray
    pose: RoiPose

    @property
    def channels(self) -> list:
        return [self.detection, self.dir_x, self.dir_y]

    @property
    def anchor(self) -> tuple:
        return anchor_of(self.size)


def anchor_of(size: int) -> tuple:
    return size / 4.0, size / 2.0


def _frame(pose: RoiPose):
    c, s = math.cos(pose.angle), math.sin(pose.angle)
    return (c, s), (-s, c)


def local_to_global(pose: RoiPose, size: int, u, v):
    (tx, ty), (nx, ny) = _frame(pose)
    ua, va = anchor_of(size)
    du = np.asarray(u, dtype=np.float64) - ua
    dv = np.asarray(v, dtype=np.float64) - va
    return pose.center[0] + du * tx + dv * nx, pose.center[1] + du * ty + dv * ny


def global_to_local(pose: RoiPose, size: int, x, y):
    (tx, ty), (nx, ny) = _frame(pose)
    ua, va = anchor_of(size)
    dx = np.asarray(x, dtype=np.float64) - pose.center[0]
    dy = np.asarray(y, dtype=np.float64) - pose.center[1]
    return ua + dx * tx + dy * ty, va + dx * nx + dy * ny


def crop_rotated(features: FeatureMaps, pose: RoiPose, size: int = 64) -> RoiPatch:
    if size < 8 or size % 2:
        raise ValueError("ROI size must be even and >= 8")
    v, u = np.mgrid[0:size, 0:size].astype(np.float64)
    gx, gy = local_to_global(pose, size, u, v)
    det = bilinear_sample_many(features.detection, gx, gy)
    dx = bilinear_sample_many(features.direction[0], gx, gy)
    dy = bilinear_sample_many(features.direction[1], gx, gy)
    return RoiPatch(size, det, dx, dy, pose)


def patch_to_global(patch: RoiPatch, local) -> tuple:
    x, y = local_to_global(patch.pose, patch.size, local[0], local[1])
    return float(x), float(y)
