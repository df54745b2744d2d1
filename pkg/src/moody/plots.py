"""Standalone SVG line charts. Output is byte-stable for identical input."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "moody"
matplotlib.rcParams["svg.fonttype"] = "none"


def line_chart(path, panels: Mapping[str, Mapping[str, Sequence[float]]], xlabel: str = "action",
               ylim=(-0.02, 1.02), marks: Sequence[float] = ()) -> Path:
    """One stacked panel per entry of ``panels``; each panel maps a label to a series.

    ``marks`` draws faint vertical lines (game boundaries, say) on every panel.
    """
    path = Path(path)
    fig, axes = plt.subplots(len(panels), 1, figsize=(9, 2.4 * len(panels)), sharex=True,
                             squeeze=False)
    for ax, (title, series) in zip(axes[:, 0], panels.items()):
        for label, ys in series.items():
            ax.plot(range(len(ys)), ys, label=label, linewidth=1.1)
        for m in marks:
            ax.axvline(m, color="0.85", linewidth=0.6)
        ax.set_title(title, fontsize=9)
        if ylim:
            ax.set_ylim(*ylim)
        ax.legend(fontsize=7, loc="upper left")
    axes[-1, 0].set_xlabel(xlabel)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
