"""Figure rendering for the report path: PNGs saved next to the CSVs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_matrix_figure(rows, path):
    """Bar chart of accuracy delta vs baseline, in absolute points, per
    dataset and augmentation condition."""
    conditions = sorted({r.augmentation for r in rows if r.augmentation != "none"})
    datasets = sorted({r.dataset for r in rows})
    fig, ax = plt.subplots(figsize=(1.8 * max(4, len(datasets) * len(conditions)), 4))
    width = 0.8 / max(1, len(conditions))
    x = np.arange(len(datasets))
    for i, cond in enumerate(conditions):
        deltas = []
        for ds in datasets:
            match = [r for r in rows if r.dataset == ds and r.augmentation == cond]
            deltas.append(100.0 * match[0].delta_vs_baseline if match else 0.0)
        ax.bar(x + i * width, deltas, width, label=cond)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(x + width * (len(conditions) - 1) / 2)
    ax.set_xticklabels(datasets)
    ax.set_ylabel("accuracy delta (absolute points)")
    ax.set_xlabel("dataset")
    if conditions:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(rows, path):
    """Accuracy vs augmentation amount, one line per dataset."""
    datasets = sorted({r.dataset for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for ds in datasets:
        pts = sorted([(r.amount, r.accuracy) for r in rows if r.dataset == ds])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=ds)
    ax.set_xlabel("augmentation amount")
    ax.set_ylabel("accuracy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_ablation_figure(rows, path):
    """Grouped bars: full vs hypernym-only accuracy per augmentation condition."""
    datasets = sorted({r["dataset"] for r in rows})
    conditions = []
    for r in rows:
        if r["augmentation"] not in conditions:
            conditions.append(r["augmentation"])
    fig, axes = plt.subplots(1, len(datasets), figsize=(5 * len(datasets), 4),
                             squeeze=False)
    x = np.arange(len(conditions))
    for ax, ds in zip(axes[0], datasets):
        for i, variant in enumerate(("full", "hyper_only")):
            accs = []
            for cond in conditions:
                match = [r for r in rows if r["dataset"] == ds
                         and r["variant"] == variant and r["augmentation"] == cond]
                accs.append(match[0]["accuracy"] if match else 0.0)
            ax.bar(x + i * 0.4, accs, 0.4, label=variant)
        ax.set_xticks(x + 0.2)
        ax.set_xticklabels(conditions)
        ax.set_ylim(0, 1)
        ax.set_title(ds)
        ax.set_ylabel("accuracy")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
