"""Figure rendering for report output.

Figures are written straight to files (Agg backend); nothing here is
interactive. Each function takes analysis results and a target path and
returns the path written.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .cea import CeaTable
from .core import CohortTrace
from .epi import EpiSeries
from .psa import CeacResult


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trace(trace: CohortTrace, path, title: str = "Cohort trace") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    cycles = np.arange(trace.values.shape[0])
    for j, name in enumerate(trace.space.names):
        ax.plot(cycles, trace.values[:, j], label=name)
    ax.set_xlabel("Cycle")
    ax.set_ylabel("Proportion of cohort")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def plot_epi_series(series_list: list[EpiSeries], path, title: str = "Outcomes") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for series in series_list:
        cycles = np.arange(len(series))
        keep = ~series.missing
        ax.plot(cycles[keep], series.values[keep], label=series.label)
    ax.set_xlabel("Cycle")
    ax.set_ylabel("Proportion")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def plot_frontier(table: CeaTable, path, title: str = "Cost-effectiveness frontier") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    frontier = table.frontier
    ax.plot(
        [r.effect for r in frontier],
        [r.cost for r in frontier],
        "o-",
        label="Frontier",
    )
    dominated = [r for r in table.rows if r.status != "ND"]
    if dominated:
        ax.plot(
            [r.effect for r in dominated],
            [r.cost for r in dominated],
            "x",
            color="tab:red",
            label="Dominated",
        )
    for r in table.rows:
        ax.annotate(r.label, (r.effect, r.cost), textcoords="offset points", xytext=(6, 4))
    ax.set_xlabel("Effect (QALYs)")
    ax.set_ylabel("Cost")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def plot_ceac(result: CeacResult, path, title: str = "Acceptability curves") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    frontier = np.array(result.frontier)
    for k, label in enumerate(result.strategies):
        (line,) = ax.plot(result.wtp, result.probabilities[:, k], label=label)
        on_frontier = frontier == label
        if np.any(on_frontier):
            ax.plot(
                result.wtp[on_frontier],
                result.probabilities[on_frontier, k],
                "o",
                ms=4,
                color=line.get_color(),
            )
    ax.set_xlabel("Willingness to pay per unit effect")
    ax.set_ylabel("Probability cost-effective")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title + " (markers: frontier)")
    ax.legend()
    return _finish(fig, path)


def plot_elc(wtp, loss, strategies, evpi, path, title: str = "Expected loss") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for k, label in enumerate(strategies):
        ax.plot(wtp, loss[:, k], label=label)
    ax.plot(wtp, evpi, "k--", lw=2, label="EVPI (lower envelope)")
    ax.set_xlabel("Willingness to pay per unit effect")
    ax.set_ylabel("Expected loss")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)
