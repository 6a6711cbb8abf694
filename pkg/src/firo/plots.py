"""Figure rendering for the report-producing commands (headless backend).

PNG metadata is pinned so repeated deterministic runs emit identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_PNG_METADATA = {"Software": "firo"}


def save_attack_sweep(accuracy_by_budget: Mapping[int, float], path: str | Path) -> Path:
    """Accuracy-under-attack curve over the perturbation budget."""
    budgets = sorted(accuracy_by_budget)
    values = [accuracy_by_budget[b] for b in budgets]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(budgets, values, marker="o", color="#b03030")
    ax.set_xlabel("perturbation budget D")
    ax.set_ylabel("accuracy under attack")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xticks(budgets)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
    return Path(path)


def save_spell_bars(values: Mapping[str, float], path: str | Path) -> Path:
    """Bar chart of word-level precision/recall/F1."""
    keys = ["precision", "recall", "f1"]
    heights = [values[k] for k in keys]
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    ax.bar(range(len(keys)), heights, color="#2f7d4f")
    ax.set_xticks(range(len(keys)), keys)
    ax.set_ylim(0, 1.05)
    ax.grid(axis="y", alpha=0.3)
    for i, h in enumerate(heights):
        ax.text(i, h + 0.01, f"{h:.3f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
    return Path(path)


def save_robfid_bars(values: Mapping[str, float], path: str | Path) -> Path:
    """Bar chart of robustness, fidelity and their three means."""
    keys = ["robustness", "fidelity", "arith", "geo", "har"]
    heights = [values[k] for k in keys]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(range(len(keys)), heights, color="#3060a0")
    ax.set_xticks(range(len(keys)), keys, rotation=20)
    ax.set_ylim(0, 1.05)
    ax.grid(axis="y", alpha=0.3)
    for i, h in enumerate(heights):
        ax.text(i, h + 0.01, f"{h:.3f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
    return Path(path)
