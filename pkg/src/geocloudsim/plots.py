"""Matplotlib figure rendering for simulation and comparison reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .simulator import BETA_BINS, COMPARISON_METRICS, ComparisonReport, SimulationReport


def save_series_figure(report: SimulationReport, path: str) -> None:
    """Per-step power, money flows and fleet state, stacked."""
    steps = range(len(report.series["it_power_w"]))
    fig, axes = plt.subplots(3, 1, figsize=(9, 8), sharex=True)
    axes[0].plot(steps, report.series["it_power_w"], label="IT power")
    axes[0].plot(steps, report.series["total_power_w"], label="total power")
    axes[0].set_ylabel("W")
    axes[0].legend(loc="upper right", fontsize=8)
    axes[1].plot(steps, report.series["energy_cost"], label="energy cost")
    axes[1].plot(steps, report.series["service_revenue"], label="service revenue")
    axes[1].set_ylabel("$ / step")
    axes[1].legend(loc="upper right", fontsize=8)
    axes[2].plot(steps, report.series["active_pms"], label="active PMs")
    ax2 = axes[2].twinx()
    ax2.plot(steps, report.series["mean_freq_ghz"], color="tab:red", label="mean freq")
    ax2.set_ylabel("GHz", color="tab:red")
    axes[2].set_ylabel("PMs")
    axes[2].set_xlabel("step")
    axes[2].legend(loc="upper left", fontsize=8)
    scn = report.scenario.describe()
    fig.suptitle(
        f"{scn['controller']} / {scn['architecture']} / {scn['pricing_scheme']}"
        f" / seed {scn['seed']}"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_histogram_figure(report: SimulationReport, path: str) -> None:
    """Log-scale occurrence counts over (CPU-boundedness, frequency)."""
    ladder = report.scenario.model.ladder
    counts = report.histogram.astype(float)
    fig, ax = plt.subplots(figsize=(7, 5))
    beta_edges = np.linspace(0.0, 1.0, BETA_BINS + 1)
    half = ladder.f_step / 2.0
    freq_edges = np.array(
        [ladder.frequencies[0] - half]
        + [f + half for f in ladder.frequencies]
    )
    masked = np.ma.masked_equal(counts, 0)
    norm = LogNorm(vmin=1, vmax=max(counts.max(), 1))
    mesh = ax.pcolormesh(freq_edges, beta_edges, masked, norm=norm, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="occurrences")
    ax.set_xlabel("host frequency (GHz)")
    ax.set_ylabel("CPU-boundedness")
    ax.set_title("occurrences of (CPU-boundedness, frequency)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_comparison_figure(cmp: ComparisonReport, path: str) -> None:
    """Grouped bars of aggregates normalised to the baseline controller."""
    controllers = list(cmp.reports)
    metrics = list(COMPARISON_METRICS)
    width = 0.8 / len(controllers)
    x = np.arange(len(metrics))
    fig, ax = plt.subplots(figsize=(9, 5))
    for i, name in enumerate(controllers):
        values = [cmp.normalized[name][m] for m in metrics]
        ax.bar(x + i * width, values, width, label=name)
    ax.axhline(1.0, color="grey", linewidth=0.8, linestyle="--")
    ax.set_xticks(x + width * (len(controllers) - 1) / 2)
    ax.set_xticklabels(metrics, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel(f"relative to {cmp.baseline}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
