"""End-to-end helpers shared by the CLI and the acceptance harness."""

from __future__ import annotations

from roadsnake.csnake import TraceConfig, detection_prior_score, trace_all
from roadsnake.postprocess import PostConfig, postprocess


def extract(features, trace_cfg: TraceConfig = TraceConfig(), post_cfg: PostConfig = PostConfig(),
            scorer=detection_prior_score) -> list:
    """Trace every endpoint seed, then prune and merge."""
    return postprocess(trace_all(features, scorer, trace_cfg), features.detection, post_cfg)
