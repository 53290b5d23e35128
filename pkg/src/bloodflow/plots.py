"""Figure rendering for simulation and forecast outputs.

All functions write PNG files and never open interactive windows; the Agg
backend is forced so they work in headless environments.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .stats import RunSummary


def plot_acceptance_series(
    series: dict[int, list[float]], out_path: str | Path, title: str = "Acceptance ratio by bank"
) -> Path:
    """One line per bank of the daily cumulative acceptance ratio."""
    fig, ax = plt.subplots(figsize=(9, 5))
    for bank_id in sorted(series):
        values = series[bank_id]
        ax.plot(range(1, len(values) + 1), values, lw=1.0, alpha=0.8, label=f"bank {bank_id}")
    ax.set_xlabel("Day")
    ax.set_ylabel("Cumulative acceptance ratio")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(series) <= 10:
        ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_run_comparison(summaries: list[RunSummary], out_path: str | Path) -> Path:
    """Acceptance ratio and total distance side by side for several runs."""
    labels = [s.policy for s in summaries]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.5))
    x = range(len(summaries))
    ax1.bar(x, [s.acceptance_ratio for s in summaries], color="tab:blue")
    ax1.set_xticks(list(x), labels, rotation=20, ha="right")
    ax1.set_ylim(0, 1.05)
    ax1.set_ylabel("Acceptance ratio")
    ax1.grid(True, axis="y", alpha=0.3)
    for i, s in enumerate(summaries):
        ax1.text(i, s.acceptance_ratio + 0.01, f"{s.acceptance_ratio:.2f}", ha="center", fontsize=9)
    ax2.bar(x, [s.total_distance for s in summaries], color="tab:orange")
    ax2.set_xticks(list(x), labels, rotation=20, ha="right")
    ax2.set_ylabel("Total units traveled")
    ax2.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_forecast_eval(eval_dict: dict, out_path: str | Path) -> Path:
    """Predicted vs actual acceptance ratio per bank for one model."""
    banks = [row["bank_id"] for row in eval_dict["per_bank"]]
    predicted = [row["predicted"] for row in eval_dict["per_bank"]]
    actual = [row["actual"] for row in eval_dict["per_bank"]]
    width = 0.4
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.bar([b - width / 2 for b in banks], actual, width=width, label="actual", color="tab:gray")
    ax.bar(
        [b + width / 2 for b in banks],
        predicted,
        width=width,
        label=f"predicted ({eval_dict['model']})",
        color="tab:green",
    )
    ax.set_xlabel("Bank")
    ax.set_ylabel("Acceptance ratio")
    ax.set_ylim(0, 1.05)
    ax.set_title(
        f"{eval_dict['model']} forecast, "
        f"mean |diff| = {eval_dict['mean_percent_difference']:.2f}%"
    )
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
