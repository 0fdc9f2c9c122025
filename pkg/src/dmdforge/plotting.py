"""Report figures: per-device score bars and render-parameter histograms."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}
METRICS = ("anls", "numeric_accuracy", "unit_accuracy", "word_level_accuracy")


def plot_per_device(report, path):
    """Grouped bars of each metric per device, plus an overall group."""
    groups = {"ALL": report.to_json()}
    groups.update(report.per_device)
    names = list(groups)
    x = np.arange(len(names))
    width = 0.8 / len(METRICS)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(names) + 2), 3.2))
        for k, metric in enumerate(METRICS):
            vals = [groups[n].get(metric) for n in names]
            vals = [np.nan if v is None else v for v in vals]
            ax.bar(x + (k - (len(METRICS) - 1) / 2) * width, vals, width, label=metric.replace("_", " "))
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=20, ha="right")
        ax.set_ylim(0, 1)
        ax.set_ylabel("score")
        ax.legend(ncol=2, fontsize=7, frameon=False)
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_render_histograms(records, path):
    """Histograms of sampled render parameters from a batch of RenderRecords."""
    fields = [("dist_mult", "distance / max dim"), ("rot_deg", "rotation (deg)"),
              ("focal_mm", "focal length (mm)"), ("light_energy", "light energy (W)")]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(fields) + 1, figsize=(3.0 * (len(fields) + 1), 2.6))
        for ax, (name, title) in zip(axes, fields):
            ax.hist([getattr(r, name) for r in records], bins=20, color="0.4")
            ax.set_title(title)
        blurred = sum(1 for r in records if r.blur)
        axes[-1].bar(["sharp", "blurred"], [len(records) - blurred, blurred], color=["0.6", "0.3"])
        axes[-1].set_title("motion blur")
        fig.savefig(path)
        plt.close(fig)
    return Path(path)
