"""Retargeting quality metrics.

The aspect-ratio similarity score tiles the source image into cells,
pushes each cell's corners through the recorded deformation, and compares
the deformed width/height ratio against the original one.  Ratios are
folded by min(r, 1/r) so stretching and squeezing count the same, and
cells are weighted by their mean importance.  A small energy-retention
diagnostic reports how much total importance survives a seam-removal log.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .fields import DeformationField, map_points, removed_source_pixels
from .raster import ImportanceMap

__all__ = ["ArsCell", "ArsReport", "ars", "energy_retention"]


@dataclass(frozen=True)
class ArsCell:
    id: int
    omega: float
    ratio: float
    contribution: float


@dataclass(frozen=True)
class ArsReport:
    score: float
    per_cell: tuple[ArsCell, ...]
    cell_size: int

    def to_csv(self) -> str:
        lines = ["cell_id,omega,r,contribution"]
        for c in self.per_cell:
            lines.append(
                f"{c.id},{c.omega:.12g},{c.ratio:.12g},{c.contribution:.12g}"
            )
        lines.append(f"score,{self.score:.12g}")
        return "\n".join(lines) + "\n"


def _cell_lines(extent: int, cell: int) -> np.ndarray:
    lines = list(range(0, extent, cell))
    lines.append(extent)
    return np.array(lines, dtype=np.float64)


def ars(
    field: DeformationField | Sequence[DeformationField],
    imap: ImportanceMap,
    cell_size: int = 16,
) -> ArsReport:
    """Importance-weighted aspect-ratio similarity in [0, 1].

    Accepts a single deformation field or a sequence applied in order
    (a two-axis seam job records one field per axis).  Cells whose mean
    importance is zero contribute nothing; if every cell has zero
    importance the weights fall back to uniform.  Cells mapped to
    non-positive extents contribute zero.
    """
    if cell_size < 1:
        raise ValueError("cell size must be at least 1")
    fields = [field] if isinstance(field, DeformationField) else list(field)
    if not fields:
        raise ValueError("need at least one deformation field")
    w, h = imap.width, imap.height
    xs = _cell_lines(w, cell_size)
    ys = _cell_lines(h, cell_size)
    ncx, ncy = len(xs) - 1, len(ys) - 1

    gx, gy = np.meshgrid(xs, ys)
    corners = np.stack([gx.ravel(), gy.ravel()], axis=1)
    mapped, size = np.asarray(corners, dtype=np.float64), (w, h)
    for stage in fields:
        mapped, size = map_points(stage, mapped, size)
    mx = mapped[:, 0].reshape(ncy + 1, ncx + 1)
    my = mapped[:, 1].reshape(ncy + 1, ncx + 1)

    # deformed extents: mean of the two opposite sides of each cell
    tw = ((mx[:-1, 1:] - mx[:-1, :-1]) + (mx[1:, 1:] - mx[1:, :-1])) / 2.0
    th = ((my[1:, :-1] - my[:-1, :-1]) + (my[1:, 1:] - my[:-1, 1:])) / 2.0
    sw = xs[1:] - xs[:-1]
    sh = ys[1:] - ys[:-1]

    cells = []
    contribs = np.zeros((ncy, ncx))
    omegas = np.zeros((ncy, ncx))
    vals = imap.values
    for cy in range(ncy):
        y0, y1 = int(ys[cy]), int(ys[cy + 1])
        for cx in range(ncx):
            x0, x1 = int(xs[cx]), int(xs[cx + 1])
            omega = float(vals[y0:y1, x0:x1].mean())
            twc, thc = float(tw[cy, cx]), float(th[cy, cx])
            if twc > 0 and thc > 0:
                ratio = (twc / thc) / (float(sw[cx]) / float(sh[cy]))
                contribution = min(ratio, 1.0 / ratio)
            else:
                ratio = 0.0
                contribution = 0.0
            omegas[cy, cx] = omega
            contribs[cy, cx] = contribution
            cells.append(ArsCell(cy * ncx + cx, omega, ratio, contribution))

    wsum = float(omegas.sum())
    if wsum > 0:
        score = float((omegas * contribs).sum() / wsum)
    else:
        score = float(contribs.mean())
    return ArsReport(score, tuple(cells), cell_size)


def energy_retention(imap: ImportanceMap, field: DeformationField) -> float:
    """Fraction of total importance not sitting on removed seam pixels."""
    xs, ys = removed_source_pixels(field, (imap.width, imap.height))
    total = float(imap.values.sum())
    if total == 0.0:
        return 1.0
    removed = float(imap.values[ys, xs].sum())
    return float(min(1.0, max(0.0, 1.0 - removed / total)))
