"""Matplotlib figure rendering for the report path.

Every CLI report writes figures next to its delimited output. The Agg
backend is forced so runs are headless and byte-reproducible.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_error_curve(curve, path, label=None):
    """Cumulative geodesic-error curve (fraction of vertices vs threshold)."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(curve.thresholds, curve.cumulative, lw=1.8, label=label)
    ax.set_xlabel("normalized geodesic error")
    ax.set_ylabel("fraction of correspondences")
    ax.set_xlim(curve.thresholds[0], curve.thresholds[-1])
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    if label:
        ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(table, path):
    """Mean error vs descriptor count, one line per method.

    ``table`` maps (method, count) -> mean error; NaN cells are skipped.
    """
    methods = sorted({m for m, _ in table})
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for method in methods:
        counts = sorted(c for m, c in table if m == method)
        errs = [table[(method, c)] for c in counts]
        ax.plot(counts, errs, marker="o", ms=4, lw=1.6, label=method)
    ax.set_xlabel("number of descriptors")
    ax.set_ylabel("mean normalized geodesic error")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_field(mesh, field, path, title=None):
    """3-D preview of a per-vertex scalar field on the mesh surface."""
    field = np.asarray(field, dtype=np.float64)
    fig = plt.figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot(projection="3d")
    v = mesh.vertices
    surf = ax.plot_trisurf(v[:, 0], v[:, 1], v[:, 2], triangles=mesh.faces,
                           cmap="viridis", linewidth=0.0, antialiased=False)
    # color faces by the mean of their vertex values
    surf.set_array(field[mesh.faces].mean(axis=1))
    ax.set_axis_off()
    ax.set_box_aspect((np.ptp(v[:, 0]), np.ptp(v[:, 1]), np.ptp(v[:, 2])))
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
