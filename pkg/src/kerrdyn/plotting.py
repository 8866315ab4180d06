"""Quick-look SVG figures.  Plots are derived from the CSV tables and never feed back."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_evolution(times, series: dict, path, title: str = "") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, y in series.items():
        ax.plot(times, y, label=name, lw=1.2)
    ax.set_xlabel(r"$\omega_1 t$")
    ax.set_title(title, fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_sweep(times, curves: Sequence[tuple[str, dict]], columns: Sequence[str], path,
               title: str = "") -> None:
    """One panel per column, one curve per sweep value."""
    plt = _pyplot()
    fig, axes = plt.subplots(len(columns), 1, figsize=(6.4, 2.6 * len(columns)), squeeze=False,
                             sharex=True)
    for ax, col in zip(axes[:, 0], columns):
        for label, series in curves:
            ax.plot(times, np.asarray(series[col], dtype=float), label=label, lw=1.2)
        ax.set_ylabel(col)
        ax.legend(fontsize=7)
    axes[-1, 0].set_xlabel(r"$\omega_1 t$")
    axes[0, 0].set_title(title, fontsize=9)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
