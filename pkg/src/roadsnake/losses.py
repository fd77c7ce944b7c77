"""Training objectives evaluated as plain numbers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from roadsnake.raster import rasterize_polyline


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 10.0
    lambda2: float = 10.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be nonnegative")


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def mse(pred, gt) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    _check_same(pred, gt)
    return float(np.mean((pred - gt) ** 2))


def detection_loss(s_pred, s_gt) -> float:
    return mse(s_pred, s_gt)


def endpoint_loss(e_pred, e_gt) -> float:
    return mse(e_pred, e_gt)


def direction_loss(d_pred, d_gt) -> float:
    """Mean ``1 - cos`` over pixels where both vectors are non-zero."""
    d_pred = np.asarray(d_pred, dtype=np.float64)
    d_gt = np.asarray(d_gt, dtype=np.float64)
    _check_same(d_pred, d_gt)
    n_pred = np.hypot(d_pred[0], d_pred[1])
    n_gt = np.hypot(d_gt[0], d_gt[1])
    ok = (n_pred > 0) & (n_gt > 0)
    if not ok.any():
        return 0.0
    # 1 - cos(a, b) == |a/|a| - b/|b||^2 / 2; this form is exactly 0 for equal
    # inputs and keeps precision near zero where 1 - cos cancels
    diff = d_pred[:, ok] / n_pred[ok] - d_gt[:, ok] / n_gt[ok]
    return float(np.mean(0.5 * (diff[0] ** 2 + diff[1] ** 2)))


def total_loss(s_pred, e_pred, d_pred, s_gt, e_gt, d_gt, w: LossWeights = LossWeights()) -> float:
    return (
        detection_loss(s_pred, s_gt)
        + w.lambda1 * endpoint_loss(e_pred, e_gt)
        + w.lambda2 * direction_loss(d_pred, d_gt)
    )


def nearest_distances(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Exact distance from each ``src`` point to its nearest ``dst`` point."""
    d, _ = cKDTree(dst.astype(np.float64)).query(src.astype(np.float64), k=1)
    return np.asarray(d, dtype=np.float64)


def chamfer(p, q) -> float:
    """Symmetric sum of nearest-neighbour distances between rasterized pixel sets."""
    a = rasterize_polyline(p)
    b = rasterize_polyline(q)
    return float(nearest_distances(a, b).sum() + nearest_distances(b, a).sum())
