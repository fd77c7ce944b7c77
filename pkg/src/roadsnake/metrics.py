"""Map-extraction evaluation: assignment, thresholded P/R/F1 and connectivity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from roadsnake.losses import nearest_distances
from roadsnake.raster import rasterize_polyline

DEFAULT_THRESHOLDS = (2.0, 3.0, 5.0, 10.0)


def _pixels(p) -> np.ndarray:
    return rasterize_polyline(p)


def hausdorff(p, q) -> float:
    a, b = _pixels(p), _pixels(q)
    return float(max(nearest_distances(a, b).max(), nearest_distances(b, a).max()))


@dataclass
class Assignment:
    pred_to_gt: list
    counts: list

    def __post_init__(self):
        if sum(self.counts) != len(self.pred_to_gt):
            raise ValueError("segment counts do not add up to the number of predictions")


def assign(preds, gts) -> Assignment:
    """Each prediction goes to the GT boundary with the smallest Hausdorff distance."""
    if not gts:
        raise ValueError("assignment needs at least one ground-truth boundary")
    gt_px = [_pixels(g) for g in gts]
    pred_to_gt = []
    counts = [0] * len(gts)
    for p in preds:
        a = _pixels(p)
        dists = [max(nearest_distances(a, b).max(), nearest_distances(b, a).max()) for b in gt_px]
        k = int(np.argmin(dists))
        pred_to_gt.append(k)
        counts[k] += 1
    return Assignment(pred_to_gt, counts)


def _union_pixels(polylines) -> np.ndarray:
    if not polylines:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.concatenate([_pixels(p) for p in polylines]), axis=0)


def precision_recall(preds, gts, thresholds=DEFAULT_THRESHOLDS) -> dict:
    """``{tau: (precision, recall)}`` over pooled rasterized pixels."""
    if any(t <= 0 for t in thresholds):
        raise ValueError("thresholds must be positive")
    pp = _union_pixels(preds)
    gg = _union_pixels(gts)
    out = {}
    if len(pp) == 0 or len(gg) == 0:
        for t in thresholds:
            out[float(t)] = (0.0, 0.0)
        return out
    d_pred = nearest_distances(pp, gg)
    d_gt = nearest_distances(gg, pp)
    for t in thresholds:
        out[float(t)] = (float(np.mean(d_pred <= t)), float(np.mean(d_gt <= t)))
    return out


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 0.0 if s == 0 else 2.0 * precision * recall / s


def _counts(a) -> list:
    return list(a.counts) if isinstance(a, Assignment) else list(a)


def connectivity_per_gt(a) -> list:
    """Per GT boundary ``1(M > 0) / M``; accepts an Assignment or raw counts."""
    return [0.0 if m == 0 else 1.0 / m for m in _counts(a)]


def connectivity(a) -> float:
    vals = connectivity_per_gt(a)
    return float(np.mean(vals)) if vals else 0.0


def connectivity_cdf(a) -> dict:
    """``{k: fraction of GT boundaries with 1 <= M <= k}`` for k = 1..max(M) (at least k = 1)."""
    counts = np.asarray(_counts(a), dtype=np.int64)
    kmax = max(1, int(counts.max()) if len(counts) else 1)
    n = max(len(counts), 1)
    return {k: float(np.sum((counts >= 1) & (counts <= k)) / n) for k in range(1, kmax + 1)}


@dataclass
class EvalReport:
    thresholds: list
    precision: list
    recall: list
    f1: list
    connectivity: float
    segment_counts: list
    cdf: dict = field(default_factory=dict)
    scenes: int = 1

    @property
    def single_segment_fraction(self) -> float:
        return self.cdf.get(1, 0.0)

    def row(self, tau: float) -> dict:
        i = self.thresholds.index(float(tau))
        return {"tau": self.thresholds[i], "precision": self.precision[i], "recall": self.recall[i], "f1": self.f1[i]}

    def to_json(self) -> dict:
        return {
            "thresholds": self.thresholds,
            "metrics": [self.row(t) for t in self.thresholds],
            "connectivity": self.connectivity,
            "segment_counts": self.segment_counts,
            "cdf": [{"k": k, "fraction": v} for k, v in sorted(self.cdf.items())],
            "scenes": self.scenes,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        rows = obj["metrics"]
        return cls(
            thresholds=[float(r["tau"]) for r in rows],
            precision=[float(r["precision"]) for r in rows],
            recall=[float(r["recall"]) for r in rows],
            f1=[float(r["f1"]) for r in rows],
            connectivity=float(obj["connectivity"]),
            segment_counts=[int(m) for m in obj["segment_counts"]],
            cdf={int(c["k"]): float(c["fraction"]) for c in obj["cdf"]},
            scenes=int(obj.get("scenes", 1)),
        )

    def csv_rows(self) -> list:
        return [(t, p, r, f) for t, p, r, f in zip(self.thresholds, self.precision, self.recall, self.f1)]


def _report(pr: dict, counts: list, scenes: int = 1) -> EvalReport:
    taus = sorted(pr)
    prec = [pr[t][0] for t in taus]
    rec = [pr[t][1] for t in taus]
    return EvalReport(
        thresholds=taus,
        precision=prec,
        recall=rec,
        f1=[f1_score(p, r) for p, r in zip(prec, rec)],
        connectivity=connectivity(counts),
        segment_counts=list(counts),
        cdf=connectivity_cdf(counts),
        scenes=scenes,
    )


def evaluate(preds, gts, thresholds=DEFAULT_THRESHOLDS) -> EvalReport:
    a = assign(preds, gts)
    return _report(precision_recall(preds, gts, thresholds), a.counts)


def aggregate(reports) -> EvalReport:
    """Average P/R across scenes; pool GT boundaries for connectivity and the CDF."""
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to aggregate")
    taus = reports[0].thresholds
    if any(r.thresholds != taus for r in reports):
        raise ValueError("reports use different thresholds")
    pr = {
        t: (float(np.mean([r.precision[i] for r in reports])), float(np.mean([r.recall[i] for r in reports])))
        for i, t in enumerate(taus)
    }
    counts = [m for r in reports for m in r.segment_counts]
    return _report(pr, counts, scenes=sum(r.scenes for r in reports))
