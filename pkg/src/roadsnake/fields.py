"""Core value types.

Rasters are plain numpy arrays indexed ``[row, col]`` (i.e. ``[y, x]``):

* scalar field: ``float64`` array of shape ``(H, W)``
* vector field: ``float64`` array of shape ``(2, H, W)`` holding ``(vx, vy)``
* pixel mask: ``bool`` array of shape ``(H, W)``

Continuous coordinates put pixel centers at integers, ``x`` to the right and
``y`` downwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


def as_scalar_field(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"scalar field must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scalar field contains non-finite values")
    return arr


def as_vector_field(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2 or arr.shape[1] < 1 or arr.shape[2] < 1:
        raise ValueError(f"vector field must have shape (2, H, W), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector field contains non-finite values")
    return arr


def as_mask(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=bool)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"mask must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


@dataclass(eq=False)
class Polyline:
    """Ordered vertex list in continuous pixel coordinates, optionally scored."""

    vertices: np.ndarray
    score: Optional[float] = None

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 2)
        if len(v) < 2:
            raise ValueError("polyline needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polyline vertices must be finite")
        if np.any(np.all(v[1:] == v[:-1], axis=1)):
            raise ValueError("polyline has identical consecutive vertices")
        v.setflags(write=False)
        self.vertices = v

    @classmethod
    def from_points(cls, points: Sequence, score: Optional[float] = None) -> "Polyline":
        """Build a polyline, silently dropping consecutive duplicate points."""
        v = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if len(v):
            keep = np.ones(len(v), dtype=bool)
            keep[1:] = np.any(v[1:] != v[:-1], axis=1)
            v = v[keep]
        return cls(v, score)

    def with_score(self, score: Optional[float]) -> "Polyline":
        return Polyline(self.vertices, score)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum())

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polyline):
            return NotImplemented
        return self.score == other.score and np.array_equal(self.vertices, other.vertices)

    def to_json(self) -> dict:
        out = {"vertices": [[float(x), float(y)] for x, y in self.vertices]}
        if self.score is not None:
            out["score"] = float(self.score)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Polyline":
        return cls(obj["vertices"], obj.get("score"))


@dataclass(eq=False)
class FeatureMaps:
    """Detection map, endpoint heatmap and direction field of one scene."""

    detection: np.ndarray
    endpoints: np.ndarray
    direction: np.ndarray
    _lookup: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        self.detection = as_scalar_field(self.detection)
        self.endpoints = as_scalar_field(self.endpoints)
        self.direction = as_vector_field(self.direction)
        if self.detection.shape != self.endpoints.shape or self.direction.shape[1:] != self.detection.shape:
            raise ValueError(
                "feature map dimensions disagree: detection %s, endpoints %s, direction %s"
                % (self.detection.shape, self.endpoints.shape, self.direction.shape[1:])
            )

    @property
    def shape(self) -> tuple:
        return self.detection.shape

    @property
    def width(self) -> int:
        return self.detection.shape[1]

    @property
    def height(self) -> int:
        return self.detection.shape[0]

    def nonzero_direction_index(self):
        """Per-pixel distance and (row, col) of the nearest non-zero direction vector.

        Returns ``None`` when the whole direction field is zero.
        """
        if self._lookup is None:
            from scipy import ndimage

            nonzero = np.any(self.direction != 0.0, axis=0)
            if not nonzero.any():
                self._lookup = (None,)
            else:
                dist, idx = ndimage.distance_transform_edt(~nonzero, return_indices=True)
                self._lookup = (dist, idx)
        return None if self._lookup[0] is None else self._lookup

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureMaps):
            return NotImplemented
        return (
            np.array_equal(self.detection, other.detection)
            and np.array_equal(self.endpoints, other.endpoints)
            and np.array_equal(self.direction, other.direction)
        )
