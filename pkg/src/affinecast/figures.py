"""Figure rendering for report outputs.

Every chart here is drawn from the same arrays that land in the CSV dumps;
the CSVs stay the source of truth and the PNGs are a convenience layer.
Uses the Agg backend so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def heatmap_grid(mats: dict[str, np.ndarray], path, title: str = "") -> str:
    """One imshow panel per named matrix, shared color scale."""
    if not mats:
        raise ValueError("nothing to draw")
    vmax = max(float(np.max(np.abs(m))) for m in mats.values()) or 1.0
    n = len(mats)
    cols = min(n, 3)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 3.4 * rows), squeeze=False)
    for ax in axes.flat[n:]:
        ax.axis("off")
    for ax, (name, m) in zip(axes.flat, mats.items()):
        im = ax.imshow(np.atleast_2d(m), aspect="auto", cmap="RdBu_r", vmin=-vmax, vmax=vmax)
        ax.set_title(name, fontsize=9)
        fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def line_chart(
    series: dict[str, np.ndarray], path, title: str = "", xlabel: str = "", ylabel: str = "",
    logy: bool = False,
) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, ys in series.items():
        ax.plot(np.arange(len(ys)), ys, label=name, linewidth=1.4)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def bias_chart(biases: dict[str, np.ndarray], path, title: str = "") -> str:
    """Bias vectors over the forecast index, one line per model."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, b in biases.items():
        ax.plot(np.arange(len(b)), b, marker="o", markersize=3, linewidth=1.2, label=name)
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.set_xlabel("forecast step")
    ax.set_ylabel("bias")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def forecast_chart(
    context: np.ndarray, truth: np.ndarray, forecasts: dict[str, np.ndarray], path,
    title: str = "",
) -> str:
    """Context window, true continuation, and each model's forecast."""
    L = len(context)
    fig, ax = plt.subplots(figsize=(7.2, 4.0))
    ax.plot(np.arange(L), context, color="gray", linewidth=1.2, label="context")
    future = np.arange(L, L + len(truth))
    ax.plot(future, truth, color="black", linewidth=1.6, label="truth")
    for name, f in forecasts.items():
        ax.plot(future, f, linewidth=1.1, alpha=0.9, label=name)
    ax.axvline(L - 0.5, color="black", linewidth=0.6, linestyle=":")
    ax.set_xlabel("time step")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def grouped_bars(
    groups: dict[str, dict[str, float]], path, title: str = "", ylabel: str = ""
) -> str:
    """groups maps x-category -> {series name -> value}."""
    cats = list(groups)
    names = sorted({n for g in groups.values() for n in g})
    width = 0.8 / max(len(names), 1)
    fig, ax = plt.subplots(figsize=(1.8 + 1.3 * len(cats), 4.0))
    for i, name in enumerate(names):
        xs = np.arange(len(cats)) + (i - (len(names) - 1) / 2) * width
        ys = [groups[c].get(name, np.nan) for c in cats]
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks(np.arange(len(cats)))
    ax.set_xticklabels(cats, fontsize=8)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)
