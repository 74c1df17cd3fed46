"""SVG line charts for harness outputs."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so identical data gives identical files
matplotlib.rcParams["svg.hashsalt"] = "optecot"
_META = {"Date": None, "Creator": "optecot"}


def line_chart(
    path: str | Path,
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    ref: float | None = None,
) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, y in series.items():
        ax.plot(x, y, label=label, linewidth=1.4)
    if ref is not None:
        ax.axhline(ref, color="grey", linestyle="--", linewidth=1.0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize="small")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def heatmap(path: str | Path, matrix: np.ndarray, costs: Sequence[float], title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    im = ax.imshow(matrix.T, aspect="auto", cmap="Greys", vmin=0.0, vmax=1.0, origin="lower")
    ax.set_yticks(range(len(costs)), [f"{c:.2f}" for c in costs])
    ax.set_xlabel("solution")
    ax.set_ylabel("cost")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path
