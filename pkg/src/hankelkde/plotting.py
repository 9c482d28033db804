"""Figure rendering for region results (Agg backend, files only)."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0

params = {
    "font.family": "serif",
    "font.size": 8,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "figure.dpi": 150,
    "lines.markersize": 6,
    "lines.markeredgewidth": 1.2,
}


def _panel(ax, field, title, truth=None):
    g = field.grid
    vals = np.maximum(field.values, 0.0)
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    ax.contourf(X, Y, vals, levels=30, cmap="viridis")
    if truth is not None:
        t = np.asarray(truth)
        t = t[g.contains(t)]
        ax.plot(t.real, t.imag, "x", color="r")
    ax.set_title(title)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_aspect("equal")


def region_figure(result, path, truth=None, title=None):
    """Four panels: empirical, pilot, Gaussian kernel, diffusion estimate."""
    panels = [
        (result.empirical, "empirical"),
        (result.pilot, "pilot"),
        (result.baseline.field if result.baseline else None, "Gaussian kernel"),
        (result.combined.field if result.combined else None, "diffusion estimate"),
    ]
    with plt.rc_context(params):
        fig, axes = plt.subplots(2, 2, figsize=(7.0, 7.0 * golden_mean * 1.6))
        for ax, (fld, name) in zip(axes.ravel(), panels):
            if fld is None:
                ax.set_axis_off()
                ax.set_title(f"{name} (n/a)")
            else:
                _panel(ax, fld, name, truth)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def comparison_figure(analytic, mc, path, title="n = 2: closed form vs Monte Carlo"):
    with plt.rc_context(params):
        fig, axes = plt.subplots(1, 2, figsize=(7.0, 3.2))
        _panel(axes[0], analytic, "closed form")
        _panel(axes[1], mc, "Monte Carlo")
        fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
