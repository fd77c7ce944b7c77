"""Structured road-boundary extraction: feature maps, a rotated-ROI polyline
tracer, post-processing, a skeleton baseline and map-extraction metrics."""

from roadsnake.fields import FeatureMaps, Polyline

__all__ = ["FeatureMaps", "Polyline"]
__version__ = "0.1.0"
