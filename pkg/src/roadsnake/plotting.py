"""Report figures: connectivity CDF and P/R/F1 against threshold."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "lines.linewidth": 1.6,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "roadsnake",
    "svg.fonttype": "none",
}


def _save(fig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_cdf(reports: dict, path) -> None:
    """Cumulative share of GT boundaries with at most k predicted segments."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        kmax = max(max(r.cdf) for r in reports.values())
        for label, r in reports.items():
            ks = list(range(1, kmax + 1))
            ys = [100.0 * r.cdf.get(k, r.cdf[max(r.cdf)]) for k in ks]
            ax.step(ks, ys, where="post", marker="o", ms=3, label=label)
        ax.set_xlabel("number of predicted segments")
        ax.set_ylabel("GT boundaries (%)")
        ax.set_ylim(0, 102)
        ax.set_xticks(range(1, kmax + 1))
        ax.legend(loc="lower right")
        fig.tight_layout()
        _save(fig, path)


def plot_prf(reports: dict, path) -> None:
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(10, 3.2), sharey=True)
        for ax, key, title in zip(axes, ("precision", "recall", "f1"), ("Precision", "Recall", "F1")):
            for label, r in reports.items():
                ax.plot(r.thresholds, [100 * v for v in getattr(r, key)], marker="o", ms=3, label=label)
            ax.set_title(title)
            ax.set_xlabel("threshold (px)")
        axes[0].set_ylabel("%")
        axes[-1].legend(loc="lower right")
        fig.tight_layout()
        _save(fig, path)


def write_cdf_csv(reports: dict, path) -> None:
    kmax = max(max(r.cdf) for r in reports.values())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "k", "fraction"])
        for label, r in reports.items():
            for k in range(1, kmax + 1):
                w.writerow([label, k, repr(r.cdf.get(k, r.cdf[max(r.cdf)]))])


def write_prf_csv(reports: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "tau", "precision", "recall", "f1"])
        for label, r in reports.items():
            for row in r.csv_rows():
                w.writerow([label, *map(repr, row)])
