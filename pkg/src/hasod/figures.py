"""Benchmark report figures, rendered to files next to the CSV output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .bench import Metrics


def render_benchmark_figures(all_metrics: list[Metrics], out_dir: str) -> list[str]:
    """Write detection-accuracy, prediction-error, and run-count figures.

    Returns the list of files written.
    """
    os.makedirs(out_dir, exist_ok=True)
    methods = sorted({m.method for m in all_metrics})
    scenarios = sorted({m.scenario for m in all_metrics})
    written = []

    # grouped detection-accuracy bars per scenario
    fig, ax = plt.subplots(figsize=(9, 4.5))
    width = 0.8 / len(methods)
    xs = np.arange(len(scenarios))
    for mi, method in enumerate(methods):
        means = [
            np.mean([m.da for m in all_metrics if m.method == method and m.scenario == s])
            for s in scenarios
        ]
        ax.bar(xs + mi * width, means, width, label=method)
    ax.set_xticks(xs + 0.4 - width / 2)
    ax.set_xticklabels(scenarios, rotation=20, ha="right")
    ax.set_ylabel("mean detection accuracy")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "detection_accuracy.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    # prediction-error distribution per method
    fig, ax = plt.subplots(figsize=(7, 4.5))
    data = [[m.pe for m in all_metrics if m.method == method] for method in methods]
    ax.boxplot(data, tick_labels=methods)
    ax.set_ylabel("prediction error at true optimum")
    fig.tight_layout()
    path = os.path.join(out_dir, "prediction_error.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    # run-count comparison
    fig, ax = plt.subplots(figsize=(7, 4.5))
    means = [np.mean([m.total_runs for m in all_metrics if m.method == method]) for method in methods]
    ax.bar(methods, means)
    ax.set_ylabel("mean total experimental runs")
    fig.tight_layout()
    path = os.path.join(out_dir, "total_runs.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    return written
