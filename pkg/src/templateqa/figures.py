"""Figure rendering for evaluation reports.

Uses the non-interactive Agg backend so figures render to files in headless
environments.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 (backend must be set first)
import numpy as np  # noqa: E402


def confusion_heatmap(confusion, path) -> None:
    """Row-normalized heatmap of a ConfusionMatrix, annotated with counts."""
    counts = np.asarray(confusion.counts, dtype=float)
    row_sums = counts.sum(axis=1, keepdims=True)
    shares = np.divide(counts, row_sums, out=np.zeros_like(counts), where=row_sums > 0)

    n = len(confusion.labels)
    fig, ax = plt.subplots(figsize=(max(6, 0.55 * n), max(5, 0.5 * n)))
    im = ax.imshow(shares, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(n), [str(l) for l in confusion.labels], rotation=90)
    ax.set_yticks(range(n), [str(l) for l in confusion.labels])
    ax.set_xlabel("predicted template")
    ax.set_ylabel("gold template")
    for i in range(n):
        for j in range(n):
            if counts[i, j]:
                color = "white" if shares[i, j] > 0.5 else "black"
                ax.text(j, i, int(counts[i, j]), ha="center", va="center",
                        fontsize=7, color=color)
    fig.colorbar(im, ax=ax, label="share of gold row")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def training_curve(log: list[dict], path) -> None:
    """Loss and test accuracy per epoch from a training log."""
    epochs = [entry["epoch"] for entry in log]
    loss = [entry["train_loss"] for entry in log]

    fig, ax1 = plt.subplots(figsize=(7, 4.5))
    ax1.plot(epochs, loss, marker="o", color="tab:red", label="train loss")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train loss", color="tab:red")
    ax1.tick_params(axis="y", labelcolor="tab:red")

    if any("test_acc" in entry for entry in log):
        ax2 = ax1.twinx()
        acc = [entry.get("test_acc") for entry in log]
        ax2.plot(epochs, acc, marker="s", color="tab:blue", label="test accuracy")
        if any("test_acc_top2" in entry for entry in log):
            top2 = [entry.get("test_acc_top2") for entry in log]
            ax2.plot(epochs, top2, marker="^", color="tab:cyan", label="test top-2")
        ax2.set_ylabel("accuracy", color="tab:blue")
        ax2.tick_params(axis="y", labelcolor="tab:blue")
        ax2.set_ylim(0.0, 1.0)
        ax2.legend(loc="lower right")

    ax1.set_xticks(epochs)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
