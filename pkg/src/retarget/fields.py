"""Deformation records mapping every retargeted pixel back to a source
location.

Two families: seam logs (one record per removed/inserted seam, in the
coordinates of the image at the moment the seam was applied) and mesh
correspondences (source/target vertex grids from the warp solver).  A
two-axis job appends records for both axes in application order; the
composed field is replayed record by record.

Text formats::

    seam-removal-log        mesh
    v 3 3 4 5               4 3 20
    h 0 1 1 0 0             sx sy tx ty     (nvx*nvy lines, row-major)

The first line names the kind; seam lines carry the axis tag then one
position per row (``v``) or per column (``h``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, KindMismatch

__all__ = [
    "SeamRecord",
    "MeshStage",
    "DeformationField",
    "map_points",
    "removed_source_pixels",
    "serialize_field",
    "parse_field",
    "save_field",
    "load_field",
]

SEAM_REMOVAL = "seam-removal-log"
SEAM_INSERTION = "seam-insertion-log"
MESH = "mesh"


@dataclass(frozen=True)
class SeamRecord:
    axis: str  # "v": one column index per row; "h": one row index per column
    positions: np.ndarray

    def __post_init__(self):
        if self.axis not in ("v", "h"):
            raise ValueError(f"bad seam axis {self.axis!r}")
        pos = np.ascontiguousarray(self.positions, dtype=np.int64)
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)


@dataclass(frozen=True)
class MeshStage:
    """One warp pass: regular source grid and its solved target positions."""

    cell_size: int
    source_vertices: np.ndarray  # (nvy, nvx, 2)
    target_vertices: np.ndarray  # (nvy, nvx, 2)

    def source_size(self):
        return (
            float(self.source_vertices[0, -1, 0]),
            float(self.source_vertices[-1, 0, 1]),
        )

    def target_size(self):
        return (
            float(self.target_vertices[0, -1, 0]),
            float(self.target_vertices[-1, 0, 1]),
        )


@dataclass(frozen=True)
class DeformationField:
    kind: str
    seams: tuple = ()
    meshes: tuple = ()

    def __post_init__(self):
        if self.kind not in (SEAM_REMOVAL, SEAM_INSERTION, MESH):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == MESH:
            if self.seams:
                raise ValueError("mesh field cannot carry seam records")
        elif self.meshes:
            raise ValueError("seam field cannot carry mesh stages")
        object.__setattr__(self, "seams", tuple(self.seams))
        object.__setattr__(self, "meshes", tuple(self.meshes))

    def __len__(self):
        return len(self.seams) if self.kind != MESH else len(self.meshes)


# ---------------------------------------------------------------------------
# Replay: forward-map source points through the field.

def _replay_seam(px, py, w, h, rec: SeamRecord, insert: bool):
    """Shift corner points (px, py) across one seam; returns new size.

    A corner at lattice position c sits between pixels c-1 and c.  For a
    vertical seam at column p the corners with c > p shift left on
    removal; corners with c >= p+1 shift right on insertion.  The seam
    position for a corner row is taken from the pixel row below it,
    clamped at the bottom edge.
    """
    if rec.axis == "v":
        if len(rec.positions) != h:
            raise CoverageError(
                f"vertical seam has {len(rec.positions)} positions, image height is {h}"
            )
        if rec.positions.min() < 0 or rec.positions.max() > w - 1:
            raise CoverageError("seam position out of bounds")
        rows = np.clip(np.floor(py).astype(np.int64), 0, h - 1)
        p_at = rec.positions[rows]
        if insert:
            px = px + (px >= p_at + 1)
            return px, py, w + 1, h
        px = px - (px > p_at)
        return px, py, w - 1, h
    # horizontal seam: same machinery with the axes swapped
    if len(rec.positions) != w:
        raise CoverageError(
            f"horizontal seam has {len(rec.positions)} positions, image width is {w}"
        )
    if rec.positions.min() < 0 or rec.positions.max() > h - 1:
        raise CoverageError("seam position out of bounds")
    cols = np.clip(np.floor(px).astype(np.int64), 0, w - 1)
    p_at = rec.positions[cols]
    if insert:
        py = py + (py >= p_at + 1)
        return px, py, w, h + 1
    py = py - (py > p_at)
    return px, py, w, h - 1


def _replay_mesh(px, py, w, h, stage: MeshStage):
    sw, sh = stage.source_size()
    if round(sw) != round(w) or round(sh) != round(h):
        raise CoverageError(
            f"mesh stage covers {sw:g}x{sh:g}, expected {w:g}x{h:g}"
        )
    xs = stage.source_vertices[0, :, 0]
    ys = stage.source_vertices[:, 0, 1]
    qx = np.clip(np.searchsorted(xs, px, side="right") - 1, 0, len(xs) - 2)
    qy = np.clip(np.searchsorted(ys, py, side="right") - 1, 0, len(ys) - 2)
    x0, x1 = xs[qx], xs[qx + 1]
    y0, y1 = ys[qy], ys[qy + 1]
    u = np.clip((px - x0) / (x1 - x0), 0.0, 1.0)
    v = np.clip((py - y0) / (y1 - y0), 0.0, 1.0)
    t = stage.target_vertices
    q00 = t[qy, qx]
    q10 = t[qy, qx + 1]
    q01 = t[qy + 1, qx]
    q11 = t[qy + 1, qx + 1]
    u = u[:, None]
    v = v[:, None]
    out = (1 - u) * (1 - v) * q00 + u * (1 - v) * q10 + (1 - u) * v * q01 + u * v * q11
    tw, th = stage.target_size()
    return out[:, 0], out[:, 1], tw, th


def map_points(field: DeformationField, points, source_size):
    """Map source-space points (N, 2) through the field.

    Points live on the corner lattice [0, W] x [0, H].  Returns the
    mapped (N, 2) array and the final (width, height).
    """
    pts = np.asarray(points, dtype=np.float64)
    px = pts[:, 0].copy()
    py = pts[:, 1].copy()
    w, h = float(source_size[0]), float(source_size[1])
    if field.kind == MESH:
        for stage in field.meshes:
            px, py, w, h = _replay_mesh(px, py, w, h, stage)
    else:
        insert = field.kind == SEAM_INSERTION
        for rec in field.seams:
            px, py, w, h = _replay_seam(px, py, int(round(w)), int(round(h)), rec, insert)
    return np.stack([px, py], axis=1), (w, h)


def removed_source_pixels(field: DeformationField, source_size):
    """Original (x, y) coordinates of every pixel removed by a removal log.

    Replays the log against index grids; each seam deletes one pixel per
    row (or column) and the survivors keep their source coordinates.
    """
    if field.kind != SEAM_REMOVAL:
        raise KindMismatch(f"removed pixels undefined for kind {field.kind!r}")
    w, h = int(source_size[0]), int(source_size[1])
    orig_x, orig_y = np.meshgrid(np.arange(w), np.arange(h))
    out_x, out_y = [], []
    for rec in field.seams:
        ch, cw = orig_x.shape
        if rec.axis == "v":
            if len(rec.positions) != ch:
                raise CoverageError("seam length does not match image height")
            if rec.positions.min() < 0 or rec.positions.max() >= cw:
                raise CoverageError("seam position out of bounds")
            rows = np.arange(ch)
            out_x.append(orig_x[rows, rec.positions])
            out_y.append(orig_y[rows, rec.positions])
            keep = np.ones((ch, cw), dtype=bool)
            keep[rows, rec.positions] = False
            orig_x = orig_x[keep].reshape(ch, cw - 1)
            orig_y = orig_y[keep].reshape(ch, cw - 1)
        else:
            if len(rec.positions) != cw:
                raise CoverageError("seam length does not match image width")
            if rec.positions.min() < 0 or rec.positions.max() >= ch:
                raise CoverageError("seam position out of bounds")
            cols = np.arange(cw)
            out_x.append(orig_x[rec.positions, cols])
            out_y.append(orig_y[rec.positions, cols])
            keep = np.ones((ch, cw), dtype=bool)
            keep[rec.positions, cols] = False
            orig_x = orig_x.T[keep.T].reshape(cw, ch - 1).T
            orig_y = orig_y.T[keep.T].reshape(cw, ch - 1).T
    if not out_x:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(out_x), np.concatenate(out_y)


# ---------------------------------------------------------------------------
# Text serialization.

def serialize_field(field: DeformationField) -> str:
    lines = [field.kind]
    if field.kind == MESH:
        for stage in field.meshes:
            nvy, nvx = stage.source_vertices.shape[:2]
            lines.append(f"{nvx} {nvy} {stage.cell_size}")
            sv = stage.source_vertices.reshape(-1, 2)
            tv = stage.target_vertices.reshape(-1, 2)
            for (sx, sy), (tx, ty) in zip(sv, tv):
                lines.append(f"{sx:.17g} {sy:.17g} {tx:.17g} {ty:.17g}")
    else:
        for rec in field.seams:
            lines.append(rec.axis + " " + " ".join(str(int(p)) for p in rec.positions))
    return "\n".join(lines) + "\n"


def parse_field(text: str) -> DeformationField:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty deformation field file")
    kind = lines[0].strip()
    if kind in (SEAM_REMOVAL, SEAM_INSERTION):
        seams = []
        for ln in lines[1:]:
            parts = ln.split()
            seams.append(SeamRecord(parts[0], np.array([int(t) for t in parts[1:]])))
        return DeformationField(kind, seams=seams)
    if kind == MESH:
        meshes = []
        i = 1
        while i < len(lines):
            nvx, nvy, cell = (int(t) for t in lines[i].split())
            i += 1
            rows = lines[i : i + nvx * nvy]
            if len(rows) != nvx * nvy:
                raise ValueError("truncated mesh stage")
            vals = np.array([[float(t) for t in ln.split()] for ln in rows])
            meshes.append(
                MeshStage(
                    cell_size=cell,
                    source_vertices=vals[:, :2].reshape(nvy, nvx, 2),
                    target_vertices=vals[:, 2:].reshape(nvy, nvx, 2),
                )
            )
            i += nvx * nvy
        return DeformationField(MESH, meshes=meshes)
    raise ValueError(f"unknown field kind {kind!r}")


def save_field(field: DeformationField, path) -> None:
    with open(str(path), "w") as fh:
        fh.write(serialize_field(field))


def load_field(path) -> DeformationField:
    with open(str(path)) as fh:
        return parse_field(fh.read())
