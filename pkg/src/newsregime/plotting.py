"""Deterministic SVG plots: line overlays and bar charts."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "newsregime", "svg.fonttype": "none", "path.simplify": False}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def emit_plot(
    series: Sequence[tuple[str, Sequence, Sequence]],
    path: str | Path,
    title: str | None = None,
    vlines: Sequence = (),
) -> Path:
    """Overlay ``(label, x, y)`` series as lines; ``x`` may be dates.

    Same inputs give a byte-identical file.
    """
    if not series:
        raise ValueError("nothing to plot")
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(9, 4))
        for label, x, y in series:
            if len(y) == 0:
                raise ValueError(f"series {label!r} is empty")
            ax.plot(np.asarray(x), np.asarray(y, dtype=float), label=label, linewidth=1)
        for v in vlines:
            ax.axvline(np.datetime64(v, "D") if not isinstance(v, (int, float)) else v, color="grey", linestyle=":")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", fontsize=8)
        fig.autofmt_xdate()
        _save(fig, path)
    return Path(path)


def emit_bar_plot(labels: Sequence[str], values: Sequence[float], path: str | Path, title: str | None = None) -> Path:
    if len(labels) == 0:
        raise ValueError("nothing to plot")
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar(list(labels), np.asarray(values, dtype=float))
        ax.axhline(0, color="black", linewidth=0.8)
        if title:
            ax.set_title(title)
        ax.tick_params(axis="x", labelrotation=30)
        fig.tight_layout()
        _save(fig, path)
    return Path(path)
