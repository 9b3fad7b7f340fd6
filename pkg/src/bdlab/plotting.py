"""PNG figures written next to the CSV/JSONL outputs (Agg backend, no display)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .lattice import CenteredSample  # noqa: E402

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    # keep PNG bytes stable between runs
    "svg.hashsalt": "bdlab",
}


def figure_path(out: Path | str, suffix: str = "") -> Path:
    out = Path(out)
    return out.with_name(out.stem + suffix + ".png")


def _save(fig, path: Path | str) -> Path:
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_profile(sample: CenteredSample, path: Path | str) -> Path:
    """Height profile and neighbour gradients along the first axis through the origin."""
    box = sample.box
    W, d = box.N, box.d
    xs = np.arange(-W, W + 1)
    line = [tuple([int(x)] + [0] * (d - 1)) for x in xs]
    u = np.array([sample.at(x) for x in line])
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 4.5), sharex=True)
        top.step(xs, u, where="mid", color="k")
        top.set_ylabel("u(x)")
        title = ", ".join(f"{k}={v}" for k, v in sample.params.items()
                          if k in ("d", "N", "mode", "value"))
        top.set_title(title)
        bottom.bar(xs[:-1] + 0.5, np.diff(u), width=0.8, color="0.35")
        bottom.axhline(0, color="k", lw=0.6)
        bottom.set_ylabel("u(x+1) - u(x)")
        bottom.set_xlabel("x")
        fig.tight_layout()
        return _save(fig, path)


def plot_table(x: Sequence[float], ys: dict, path: Path | str, *, xlabel: str,
               ylabel: str, logy: bool = False, errors: dict | None = None) -> Path:
    """One line per named column; optional symmetric error bars."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, y in ys.items():
            err = None if errors is None else errors.get(name)
            y = np.asarray(y, float)
            if logy:
                keep = y > 0
                xk = np.asarray(x, float)[keep]
                ax.errorbar(xk, y[keep], yerr=None if err is None else np.asarray(err)[keep],
                            marker="o", ms=3, label=name, capsize=2)
            else:
                ax.errorbar(x, y, yerr=err, marker="o", ms=3, label=name, capsize=2)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(ys) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_histogram(labels: Sequence[int], counts: Sequence[int], path: Path | str, *,
                   xlabel: str) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        c = np.asarray(counts, float)
        ax.bar(labels, c / max(c.sum(), 1), width=0.8, color="0.35")
        ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("frequency")
        fig.tight_layout()
        return _save(fig, path)
