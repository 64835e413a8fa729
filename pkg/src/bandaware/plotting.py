"""Figures written next to the delimited reports.

Uses the object-oriented matplotlib API with the Agg canvas only, so
rendering never touches pyplot's global state.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
}
# PNG metadata carries no version string, so reruns are byte-identical
_SAVE_KW = dict(dpi=150, metadata={"Software": None})


def _figure(width=4.0, height=None):
    if height is None:
        height = width * (math.sqrt(5) - 1.0) / 2.0 + 0.6
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig


def _apply_style(ax):
    ax.grid(True, lw=0.4, alpha=0.5)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    ax.title.set_fontsize(STYLE["axes.titlesize"])
    ax.xaxis.label.set_fontsize(STYLE["axes.labelsize"])
    ax.yaxis.label.set_fontsize(STYLE["axes.labelsize"])
    ax.tick_params(labelsize=STYLE["font.size"])


def metric_scatter(manifest, metric, path, group_by="source_id"):
    """Metric vs MOS scatter, one colour per group, with CI error bars if present."""
    mos = manifest.column("mos")
    values = manifest.column(metric)
    ci = manifest.column("ci95")
    groups = [getattr(it, group_by) for it in manifest.items]
    fig = _figure()
    ax = fig.add_subplot(111)
    for g in sorted(set(groups)):
        sel = np.array([x == g for x in groups]) & ~np.isnan(values)
        yerr = ci[sel] if manifest.has_ci95 and not np.any(np.isnan(ci[sel])) else None
        ax.errorbar(values[sel], mos[sel], yerr=yerr, fmt="o", ms=3, lw=0.6,
                    capsize=1.5, label=str(g))
    ax.set_xlabel(metric)
    ax.set_ylabel("MOS")
    ax.set_title(f"{metric} vs. MOS")
    if len(set(groups)) <= 10:
        ax.legend(frameon=False, ncol=2)
    _apply_style(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    return Path(path)


def calibration_curve(result, path):
    alphas = np.array([a for a, _ in result.curve])
    sroccs = np.array([np.nan if s is None else s for _, s in result.curve], dtype=float)
    fig = _figure()
    ax = fig.add_subplot(111)
    ax.plot(alphas, sroccs, lw=1.0)
    ax.axvline(result.best_alpha, ls="--", lw=0.8, color="C3")
    ax.annotate(f"alpha = {result.best_alpha:.2f}\nSROCC = {result.best_srocc:.3f}",
                xy=(result.best_alpha, result.best_srocc), xytext=(5, -25),
                textcoords="offset points", fontsize=STYLE["legend.fontsize"])
    ax.set_xlabel("alpha")
    ax.set_ylabel("SROCC")
    _apply_style(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    return Path(path)


def banding_timeline(report, path, title=None):
    fig = _figure(width=5.0)
    ax = fig.add_subplot(111)
    ax.plot(np.arange(len(report.per_frame)), report.per_frame, marker=".", lw=0.8)
    ax.axhline(report.pooled, ls="--", lw=0.8, color="C3", label="pooled")
    ax.set_ylim(0, max(report.params_used.output_gain * 0.25, max(report.per_frame) * 1.1))
    ax.set_xlabel("frame")
    ax.set_ylabel("banding index")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    _apply_style(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    return Path(path)
