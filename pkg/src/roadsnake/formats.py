"""On-disk formats: f32 raster + JSON sidecar, polyline and annotation JSON."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from roadsnake.fields import FeatureMaps, Polyline


class FormatError(ValueError):
    """A file exists but does not hold what it claims to."""


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    atomic_write_bytes(path, dumps_json(obj).encode("utf-8"))


def read_json(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


# rasters ---------------------------------------------------------------

def raster_paths(stem) -> tuple:
    stem = Path(stem)
    return stem.with_name(stem.name + ".f32"), stem.with_name(stem.name + ".json")


def write_raster(stem, array: np.ndarray) -> None:
    """Write a (H, W) or planar (C, H, W) array as little-endian float32."""
    arr = np.asarray(array)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"raster must be 2-D or 3-D, got shape {arr.shape}")
    c, h, w = arr.shape
    data_path, meta_path = raster_paths(stem)
    atomic_write_bytes(data_path, np.ascontiguousarray(arr, dtype="<f4").tobytes())
    write_json(meta_path, {"width": int(w), "height": int(h), "channels": int(c), "dtype": "f32"})


def read_raster(stem) -> np.ndarray:
    """Read a raster back as float64; single-channel rasters come back 2-D."""
    data_path, meta_path = raster_paths(stem)
    for p in (data_path, meta_path):
        if not p.exists():
            raise FileNotFoundError(f"missing raster file: {p}")
    meta = read_json(meta_path)
    try:
        w, h, c = int(meta["width"]), int(meta["height"]), int(meta["channels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{meta_path}: bad raster sidecar") from exc
    if meta.get("dtype") != "f32":
        raise FormatError(f"{meta_path}: unsupported dtype {meta.get('dtype')!r}")
    raw = np.fromfile(data_path, dtype="<f4")
    if raw.size != w * h * c:
        raise FormatError(f"{data_path}: expected {w * h * c} values, found {raw.size}")
    arr = raw.reshape(c, h, w).astype(np.float64)
    return arr[0] if c == 1 else arr


def export_png16(path, field: np.ndarray) -> None:
    """Linear 16-bit grayscale preview of a scalar field."""
    from PIL import Image

    f = np.asarray(field, dtype=np.float64)
    lo, hi = float(f.min()), float(f.max())
    scaled = np.zeros_like(f) if hi <= lo else (f - lo) / (hi - lo)
    img = Image.fromarray(np.round(scaled * 65535).astype(np.uint16))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    img.save(path)


# feature maps ----------------------------------------------------------

FEATURE_NAMES = ("detection", "endpoints", "direction")


def write_features(directory, features: FeatureMaps, suffix: str) -> list:
    directory = Path(directory)
    stems = []
    for name in FEATURE_NAMES:
        stem = directory / f"{name}.{suffix}"
        write_raster(stem, getattr(features, name))
        stems.append(stem)
    return stems


def read_features(directory, suffix: str) -> FeatureMaps:
    directory = Path(directory)
    arrays = {name: read_raster(directory / f"{name}.{suffix}") for name in FEATURE_NAMES}
    if arrays["direction"].ndim != 3:
        raise FormatError(f"{directory / ('direction.' + suffix)}: expected 2 channels")
    return FeatureMaps(**arrays)


# polylines -------------------------------------------------------------

def polylines_to_json(polylines) -> dict:
    return {"polylines": [p.to_json() for p in polylines]}


def write_polylines(path, polylines) -> None:
    write_json(path, polylines_to_json(polylines))


def read_polylines(path) -> list:
    """Read either the polyline format or an annotation file's boundaries."""
    obj = read_json(path)
    key = "polylines" if "polylines" in obj else "boundaries" if "boundaries" in obj else None
    if key is None:
        raise FormatError(f"{path}: neither 'polylines' nor 'boundaries' present")
    try:
        return [Polyline.from_json(o) for o in obj[key]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad polyline entry ({exc})") from exc


def annotations_to_json(boundaries, width: int, height: int, resolution: float = 0.04) -> dict:
    return {
        "width": int(width),
        "height": int(height),
        "resolution_m_per_px": float(resolution),
        "boundaries": [{"vertices": p.to_json()["vertices"]} for p in boundaries],
    }


def read_annotations(path):
    """Return ``(boundaries, width, height, resolution)``."""
    obj = read_json(path)
    try:
        bounds = [Polyline.from_json(o) for o in obj["boundaries"]]
        return bounds, int(obj["width"]), int(obj["height"]), float(obj.get("resolution_m_per_px", 0.04))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad annotation file ({exc})") from exc
