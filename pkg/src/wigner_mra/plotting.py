"""Matplotlib figures for run reports (PNG, non-interactive backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .moyal import CoefficientField  # noqa: E402

__all__ = ["plot_field", "plot_diagnostics", "plot_scales"]

_META = {"Software": None}  # keep PNG bytes independent of the matplotlib build string


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_field(field_: CoefficientField, path, title: str = "") -> Path:
    g = field_.grid
    c = float(np.max(np.abs(field_.data))) or 1.0
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    extent = (g.q[0], g.q[-1] + g.dq, g.p[0], g.p[-1] + g.dp)
    im = ax.imshow(field_.data.T, origin="lower", extent=extent, cmap="RdBu_r", vmin=-c, vmax=c, aspect="auto")
    fig.colorbar(im, ax=ax, label="W")
    ax.set_xlabel("q")
    ax.set_ylabel("p")
    ax.set_title(title or f"W at t = {field_.time:.4g}")
    fig.tight_layout()
    return _save(fig, path)


def plot_diagnostics(header, rows, path) -> Path:
    data = np.array([[float(v) for v in r] for r in rows])
    t = data[:, 0]
    cols = {name: data[:, i] for i, name in enumerate(header)}
    fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=True)
    for ax, name in zip(axes.ravel(), ("normalization", "purity", "negativity_volume", "energy")):
        ax.plot(t, cols[name], marker=".")
        ax.set_title(name)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("t")
    fig.tight_layout()
    return _save(fig, path)


def plot_scales(rows, path) -> Path:
    labels = [r[0] for r in rows]
    energy = np.array([float(r[1]) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(labels)), np.maximum(energy, 1e-300))
    ax.set_yscale("log")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_xlabel("level")
    ax.set_ylabel("energy")
    ax.set_title("energy per scale")
    fig.tight_layout()
    return _save(fig, path)
