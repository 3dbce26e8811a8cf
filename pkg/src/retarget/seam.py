"""Discrete retargeting operator: minimum-energy seam removal/insertion.

A vertical seam is an 8-connected path with one column index per row;
removing it narrows the image by one pixel.  Horizontal seams reuse the
vertical machinery on transposed arrays.  The loop removes (or inserts)
seams one at a time, refreshing the energy map per the provider policy,
and logs every seam into a DeformationField.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import CARRY, EnergyProvider, energy_for_iteration
from .errors import DegenerateTarget, DimensionMismatch, InvalidSeam
from .fields import SEAM_INSERTION, SEAM_REMOVAL, DeformationField, SeamRecord
from .raster import ImportanceMap, RasterImage, TargetSpec

__all__ = [
    "Seam",
    "SeamPlan",
    "plan",
    "min_seam",
    "remove_seam",
    "insert_seams",
    "retarget_seam",
]


@dataclass(frozen=True)
class Seam:
    orientation: str  # "vertical" or "horizontal"
    positions: np.ndarray
    total_energy: float

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.int64)
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def axis_tag(self) -> str:
        return "v" if self.orientation == "vertical" else "h"


@dataclass(frozen=True)
class SeamPlan:
    iterations: int
    direction: str  # "remove" or "insert"
    orientation: str  # seam orientation used to reach the target


def plan(current_size, target: TargetSpec) -> SeamPlan:
    """Iteration count and direction for one single-axis pass.

    Vertical resizing changes width by |w - w'| vertical seams;
    horizontal resizing changes height by |h - h'| horizontal seams.
    """
    w, h = current_size
    if target.axis == "vertical":
        if target.target_height != h:
            raise ValueError("vertical pass must keep height fixed")
        count = abs(w - target.target_width)
        direction = "insert" if target.target_width > w else "remove"
        if direction == "remove" and target.target_width < 1:
            raise DegenerateTarget("target width must be at least 1")
        if direction == "remove" and count >= w:
            raise DegenerateTarget("cannot remove an entire axis")
        return SeamPlan(count, direction, "vertical")
    if target.target_width != w:
        raise ValueError("horizontal pass must keep width fixed")
    count = abs(h - target.target_height)
    direction = "insert" if target.target_height > h else "remove"
    if direction == "remove" and target.target_height < 1:
        raise DegenerateTarget("target height must be at least 1")
    if direction == "remove" and count >= h:
        raise DegenerateTarget("cannot remove an entire axis")
    return SeamPlan(count, direction, "horizontal")


def _min_seam_vertical(energy: np.ndarray):
    """Dynamic program over cumulative energy; ties resolved to the
    smallest column index (bottom row first, then each predecessor)."""
    h, w = energy.shape
    cum = np.empty_like(energy)
    cum[0] = energy[0]
    inf = np.inf
    for r in range(1, h):
        prev = cum[r - 1]
        left = np.concatenate(([inf], prev[:-1]))
        right = np.concatenate((prev[1:], [inf]))
        cum[r] = energy[r] + np.minimum(np.minimum(left, prev), right)
    positions = np.empty(h, dtype=np.int64)
    positions[-1] = int(np.argmin(cum[-1]))  # argmin picks the first minimum
    for r in range(h - 2, -1, -1):
        c = positions[r + 1]
        lo = max(c - 1, 0)
        hi = min(c + 1, w - 1)
        window = cum[r, lo : hi + 1]
        positions[r] = lo + int(np.argmin(window))
    return positions, float(cum[-1, positions[-1]])


def min_seam(energy: ImportanceMap | np.ndarray, orientation: str = "vertical") -> Seam:
    """Globally minimum cumulative-energy 8-connected seam."""
    values = energy.values if isinstance(energy, ImportanceMap) else np.asarray(energy)
    if orientation == "vertical":
        pos, total = _min_seam_vertical(values)
    elif orientation == "horizontal":
        pos, total = _min_seam_vertical(values.T)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return Seam(orientation, pos, total)


def _check_seam(seam: Seam, w: int, h: int):
    pos = seam.positions
    if seam.orientation == "vertical":
        length, bound = h, w
    else:
        length, bound = w, h
    if len(pos) != length:
        raise InvalidSeam(f"seam length {len(pos)} does not match image")
    if pos.min() < 0 or pos.max() >= bound:
        raise InvalidSeam("seam position out of bounds")
    if len(pos) > 1 and np.abs(np.diff(pos)).max() > 1:
        raise InvalidSeam("seam violates 8-connectivity")


def _delete_positions(grid: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Drop one entry per row of a (h, w[, c]) array."""
    h, w = grid.shape[:2]
    keep = np.ones((h, w), dtype=bool)
    keep[np.arange(h), positions] = False
    return grid[keep].reshape((h, w - 1) + grid.shape[2:])


def remove_seam(
    img: RasterImage,
    carried: ImportanceMap | None,
    seam: Seam,
):
    """Remove one seam from the image (and from the carried map, if any)."""
    _check_seam(seam, img.width, img.height)
    if seam.orientation == "vertical":
        if img.width <= 1:
            raise DegenerateTarget("removal would produce width 0")
        px = _delete_positions(img.pixels, seam.positions)
    else:
        if img.height <= 1:
            raise DegenerateTarget("removal would produce height 0")
        px = _delete_positions(
            img.pixels.transpose(1, 0, 2), seam.positions
        ).transpose(1, 0, 2)
    out_map = None
    if carried is not None:
        if (carried.width, carried.height) != (img.width, img.height):
            raise DimensionMismatch("carried map does not match image size")
        if seam.orientation == "vertical":
            vals = _delete_positions(carried.values, seam.positions)
        else:
            vals = _delete_positions(carried.values.T, seam.positions).T
        out_map = ImportanceMap(vals)
    return RasterImage(np.ascontiguousarray(px)), out_map


def _to_pass_start_coords(raw_seams):
    """Map sequentially recorded seams back to the coordinates of the
    image the pass started from.  The resulting seams are disjoint."""
    restored = []
    for j, seam in enumerate(raw_seams):
        pos = seam.copy()
        for prior in raw_seams[j - 1 :: -1] if j else []:
            pos = pos + (pos >= prior)
        restored.append(pos)
    return restored


def _insert_into(grid: np.ndarray, marked_sorted: np.ndarray, out: np.ndarray):
    """Rebuild one row, duplicating marked columns with neighbor averaging."""
    w = grid.shape[0]
    src = grid.astype(np.float64)
    rounded = grid.dtype.kind == "u"
    oi = 0
    mi = 0
    for x in range(w):
        out[oi] = grid[x]
        oi += 1
        if mi < len(marked_sorted) and marked_sorted[mi] == x:
            nb = min(x + 1, w - 1)
            mean = (src[x] + src[nb]) / 2.0
            out[oi] = np.rint(mean) if rounded else mean
            oi += 1
            mi += 1


def _rebuild_with_marks(pixels: np.ndarray, map_vals, start_coords, k: int):
    """Grow (h, w, ...) pixels by duplicating the marked columns."""
    h, w = pixels.shape[:2]
    out = np.empty((h, w + k) + pixels.shape[2:], dtype=pixels.dtype)
    out_map = np.empty((h, w + k)) if map_vals is not None else None
    for r in range(h):
        ms = np.array(sorted(int(pos[r]) for pos in start_coords), dtype=np.int64)
        _insert_into(pixels[r], ms, out[r])
        if map_vals is not None:
            _insert_into(map_vals[r], ms, out_map[r])
    return out, out_map


def insert_seams(
    img: RasterImage,
    provider: EnergyProvider,
    k: int,
    orientation: str = "vertical",
    carried: ImportanceMap | None = None,
):
    """Widen (or heighten) the image by k seams with neighbor averaging.

    The seams are the k cheapest removal seams of a scratch copy, mapped
    back to the original coordinates and duplicated there.  The returned
    records re-express those disjoint seams as a sequential log.
    """
    if k < 0:
        raise ValueError("seam count must be non-negative")
    if k == 0:
        return img, carried, DeformationField(SEAM_INSERTION)
    limit = img.width if orientation == "vertical" else img.height
    if k >= limit:
        raise DegenerateTarget("cannot insert more seams than the axis allows")

    scratch, scratch_map = img, carried
    raw = []
    for _ in range(k):
        e = energy_for_iteration(provider, scratch, scratch_map)
        seam = min_seam(e, orientation)
        raw.append(seam.positions.copy())
        scratch, scratch_map = remove_seam(scratch, scratch_map, seam)
    start_coords = _to_pass_start_coords(raw)

    if orientation == "vertical":
        px, mv = _rebuild_with_marks(
            img.pixels, carried.values if carried else None, start_coords, k
        )
        tag = "v"
    else:
        px, mv = _rebuild_with_marks(
            img.pixels.transpose(1, 0, 2),
            carried.values.T if carried else None,
            start_coords,
            k,
        )
        px = px.transpose(1, 0, 2)
        mv = mv.T if mv is not None else None
        tag = "h"

    records = []
    for j, pos in enumerate(start_coords):
        shifted = pos.copy()
        for prior in start_coords[:j]:
            shifted = shifted + (prior < pos)
        records.append(SeamRecord(tag, shifted))
    out_map = ImportanceMap(mv) if mv is not None else None
    field = DeformationField(SEAM_INSERTION, seams=tuple(records))
    return RasterImage(np.ascontiguousarray(px)), out_map, field


def retarget_seam(
    img: RasterImage,
    provider: EnergyProvider,
    target: TargetSpec,
    carried: ImportanceMap | None = None,
):
    """Run the seam loop to the target size for one axis.

    Returns the retargeted image and the DeformationField logging every
    seam in application order.  Enlargement beyond 2x is handled by
    repeated insertion passes (each pass can add at most width-1 seams).
    """
    p = plan((img.width, img.height), target)
    if provider.refresh == CARRY and carried is None:
        raise DimensionMismatch("carry-with-image provider needs an initial map")
    if carried is not None and (carried.width, carried.height) != (img.width, img.height):
        raise DimensionMismatch("initial map does not match image size")

    if p.direction == "remove":
        records = []
        cur, cur_map = img, carried
        for _ in range(p.iterations):
            e = energy_for_iteration(provider, cur, cur_map)
            seam = min_seam(e, p.orientation)
            cur, cur_map = remove_seam(cur, cur_map, seam)
            records.append(SeamRecord(seam.axis_tag, seam.positions))
        return cur, cur_map, DeformationField(SEAM_REMOVAL, seams=tuple(records))

    records = []
    cur, cur_map = img, carried
    remaining = p.iterations
    while remaining > 0:
        limit = cur.width if p.orientation == "vertical" else cur.height
        step = min(remaining, limit - 1)
        if step == 0:
            raise DegenerateTarget("cannot enlarge a single-pixel axis by seams")
        cur, cur_map, part = insert_seams(cur, provider, step, p.orientation, cur_map)
        records.extend(part.seams)
        remaining -= step
    return cur, cur_map, DeformationField(SEAM_INSERTION, seams=tuple(records))
