"""Figure rendering for CLI reports.

Everything draws through the Agg backend so jobs stay headless; each
helper writes a single PNG next to whatever textual output the command
produced.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fields import MESH, SEAM_REMOVAL, DeformationField, removed_source_pixels
from .metrics import ArsReport
from .raster import ImportanceMap, RasterImage

__all__ = [
    "save_energy_figure",
    "save_segment_figure",
    "save_ars_figure",
    "save_field_figure",
]


def save_energy_figure(imap: ImportanceMap, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 6 * imap.height / max(imap.width, 1)))
    im = ax.imshow(imap.values, cmap="magma", vmin=0.0, vmax=1.0)
    ax.set_title("importance")
    ax.axis("off")
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_segment_figure(labels: np.ndarray, path) -> None:
    n = int(labels.max()) + 1
    rng = np.random.default_rng(0)
    colors = rng.random((n, 3))
    fig, ax = plt.subplots()
    ax.imshow(colors[labels])
    ax.set_title(f"{n} patches")
    ax.axis("off")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_ars_figure(report: ArsReport, source_size, path) -> None:
    w, h = source_size
    ncx = math.ceil(w / report.cell_size)
    ncy = math.ceil(h / report.cell_size)
    contrib = np.array([c.contribution for c in report.per_cell]).reshape(ncy, ncx)
    omega = np.array([c.omega for c in report.per_cell]).reshape(ncy, ncx)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 5))
    im1 = ax1.imshow(contrib, cmap="viridis", vmin=0.0, vmax=1.0)
    ax1.set_title("per-cell min(r, 1/r)")
    fig.colorbar(im1, ax=ax1, fraction=0.046)
    im2 = ax2.imshow(omega, cmap="magma", vmin=0.0, vmax=1.0)
    ax2.set_title("cell weight")
    fig.colorbar(im2, ax=ax2, fraction=0.046)
    fig.suptitle(f"aspect-ratio similarity {report.score:.6f}")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_field_figure(img: RasterImage, field: DeformationField, path) -> None:
    """Overlay the deformation on the source: removed seam pixels for
    removal logs, the deformed grid for mesh fields."""
    fig, ax = plt.subplots()
    if field.kind == MESH and field.meshes:
        stage = field.meshes[-1]
        tv = stage.target_vertices
        for r in range(tv.shape[0]):
            ax.plot(tv[r, :, 0], tv[r, :, 1], color="tab:blue", linewidth=0.8)
        for c in range(tv.shape[1]):
            ax.plot(tv[:, c, 0], tv[:, c, 1], color="tab:blue", linewidth=0.8)
        ax.invert_yaxis()
        ax.set_aspect("equal")
        ax.set_title("deformed grid")
    else:
        ax.imshow(img.pixels)
        if field.kind == SEAM_REMOVAL and len(field):
            xs, ys = removed_source_pixels(field, (img.width, img.height))
            ax.scatter(xs, ys, s=0.3, c="red", marker=".")
        ax.set_title(f"{len(field)} seams")
        ax.axis("off")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
