"""Headless figure rendering for detection runs.

Every figure is written through the Agg backend with the software
metadata tag suppressed, so repeated runs with identical inputs produce
byte-identical image files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def plot_statistic_series(path, stats, threshold=None, ylabel="detection statistic"):
    """Per-sample statistic trace with an optional threshold line."""
    stats = np.asarray(stats, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.plot(np.arange(stats.size), stats, lw=1.2, color="#1f77b4", label=ylabel)
    if threshold is not None:
        ax.axhline(
            float(threshold), color="#d62728", lw=1.2, ls="--",
            label=f"threshold = {float(threshold):.6g}",
        )
    ax.set_xlabel("sample")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_label_series(path, actual, pred):
    """Actual vs predicted class codes per sample."""
    actual = np.asarray(actual, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    idx = np.arange(actual.size)
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.step(idx, actual, where="mid", lw=1.8, color="#2ca02c", label="actual")
    ax.plot(idx, pred, ".", ms=4.0, color="#1f77b4", label="predicted")
    ax.set_xlabel("sample")
    ax.set_ylabel("class code")
    ax.set_yticks(sorted(set(actual) | set(pred)))
    ax.grid(alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_penalty_curve(path, curve, best_c=None):
    """Mean AUC against the penalty factor, log-scaled x axis."""
    curve = np.asarray(curve, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.semilogx(curve[:, 0], curve[:, 1], lw=1.2, color="#1f77b4")
    if best_c is not None:
        ax.axvline(float(best_c), color="#d62728", lw=1.2, ls="--",
                   label=f"selected C = {float(best_c):.6g}")
        ax.legend(loc="best")
    ax.set_xlabel("penalty factor C")
    ax.set_ylabel("mean AUC")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
