"""Report figures: spectral embedding, solver convergence, sweep trends."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (6.0, 4.5)
DPI = 120


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_embedding(coords: np.ndarray, assignment: np.ndarray, path, title: str = ""):
    """Scatter of the first two embedding coordinates coloured by part."""
    coords = np.asarray(coords)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    if coords.shape[1] >= 2:
        x, y = coords[:, 0], coords[:, 1]
        ax.set_xlabel("eigenvector 2")
        ax.set_ylabel("eigenvector 3")
    else:
        x, y = np.arange(coords.shape[0]), coords[:, 0]
        ax.set_xlabel("vertex")
        ax.set_ylabel("eigenvector 2")
    assignment = np.asarray(assignment)
    K = int(assignment.max()) + 1
    cmap = plt.get_cmap("tab20" if K > 10 else "tab10", K)
    sc = ax.scatter(x, y, c=assignment, cmap=cmap, vmin=-0.5, vmax=K - 0.5, s=6, linewidths=0)
    cb = fig.colorbar(sc, ax=ax, label="part")
    cb.set_ticks(range(K) if K <= 24 else np.linspace(0, K - 1, 7).round())
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_convergence(history: Sequence, path, threshold: float = None):
    it = [h.iteration for h in history]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.semilogy(it, [max(h.max_residual, 1e-300) for h in history], label="max residual")
    ax.semilogy(it, [max(h.min_residual, 1e-300) for h in history], label="min residual", ls="--")
    if threshold:
        ax.axhline(threshold, color="k", lw=0.8, ls=":", label="threshold")
    ax.set_xlabel("LOBPCG iteration")
    ax.set_ylabel("residual norm")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_sweep(rows: Iterable, path):
    """Iterations and cutsize against tolerance, one line per series."""
    series = defaultdict(list)
    for r in rows:
        if r.error:
            continue
        series[(r.graph, r.precond, r.problem)].append(r)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(2 * FIGSIZE[0], FIGSIZE[1]))
    for (g, pc, pb), rs in sorted(series.items()):
        rs = sorted(rs, key=lambda r: -r.tol)
        tol = [r.tol for r in rs]
        label = f"{g} {pc}/{pb}"
        a1.plot(tol, [r.iterations for r in rs], marker="o", label=label)
        a2.plot(tol, [r.cutsize for r in rs], marker="s", mfc="none", label=label)
    for ax, lab in ((a1, "LOBPCG iterations"), (a2, "cutsize")):
        ax.set_xscale("log")
        ax.invert_xaxis()
        ax.set_xlabel("tolerance")
        ax.set_ylabel(lab)
    a1.legend(frameon=False, fontsize=8)
    return _save(fig, path)
