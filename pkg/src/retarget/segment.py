"""Patch decomposition: graph-based segmentation plus per-patch importance.

The image is partitioned by the classic efficient graph-based scheme:
Gaussian smoothing, an 8-connected grid graph with Euclidean RGB edge
weights, and a single sweep over edges in nondecreasing weight order that
merges components whose adaptive thresholds admit the edge.  A second
sweep folds every component below min_patch_size into its most similar
neighbor (its cheapest boundary edge comes first in the sorted order).
Each patch then carries the arithmetic mean of the importance map over
its pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DimensionMismatch
from .raster import ImportanceMap, RasterImage

__all__ = [
    "SegmentationParams",
    "Patch",
    "PatchMap",
    "segment",
    "patch_energy",
]


@dataclass(frozen=True)
class SegmentationParams:
    smoothing_sigma: float = 0.8
    threshold_k: float = 300.0
    min_patch_size: int = 50

    def __post_init__(self):
        if self.smoothing_sigma <= 0 or self.threshold_k <= 0 or self.min_patch_size <= 0:
            raise ValueError("segmentation parameters must be strictly positive")


@dataclass(frozen=True)
class Patch:
    id: int
    size: int
    omega: float


@dataclass(frozen=True)
class PatchMap:
    labels: np.ndarray
    patches: tuple[Patch, ...]

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.int64)
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @property
    def count(self) -> int:
        return len(self.patches)

    def omega_by_id(self) -> np.ndarray:
        """Dense lookup: omega_by_id()[patch_id] -> omega."""
        out = np.zeros(self.count)
        for p in self.patches:
            out[p.id] = p.omega
        return out


def _grid_edges(h: int, w: int, smooth: np.ndarray):
    """8-connected edges as (source, target, weight), source = upper/left
    pixel in row-major index order."""
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    flat = smooth.reshape(h * w, 3)
    srcs, tgts = [], []
    if w > 1:
        srcs.append(idx[:, :-1].ravel())
        tgts.append(idx[:, 1:].ravel())
    if h > 1:
        srcs.append(idx[:-1, :].ravel())
        tgts.append(idx[1:, :].ravel())
    if h > 1 and w > 1:
        srcs.append(idx[:-1, :-1].ravel())
        tgts.append(idx[1:, 1:].ravel())
        srcs.append(idx[:-1, 1:].ravel())
        tgts.append(idx[1:, :-1].ravel())
    if not srcs:
        return (
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0),
        )
    src = np.concatenate(srcs)
    tgt = np.concatenate(tgts)
    diff = flat[src] - flat[tgt]
    weight = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return src, tgt, weight


def _find(parent: list, x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def segment(img: RasterImage, params: SegmentationParams = SegmentationParams()) -> np.ndarray:
    """Deterministic partition of the image into patch labels 0..n-1.

    Labels are renumbered by first appearance in row-major order, so the
    result is stable across runs for identical inputs.
    """
    h, w = img.height, img.width
    smooth = np.empty((h, w, 3))
    for c in range(3):
        smooth[:, :, c] = gaussian_filter(
            img.pixels[:, :, c].astype(np.float64), params.smoothing_sigma
        )
    src, tgt, weight = _grid_edges(h, w, smooth)
    # nondecreasing weight; ties resolved by source then target index
    order = np.lexsort((tgt, src, weight))
    src_l = src[order].tolist()
    tgt_l = tgt[order].tolist()
    w_l = weight[order].tolist()

    n = h * w
    parent = list(range(n))
    size = [1] * n
    k = params.threshold_k
    thr = [k] * n
    for a, b, ew in zip(src_l, tgt_l, w_l):
        ra = _find(parent, a)
        rb = _find(parent, b)
        if ra == rb:
            continue
        if ew <= thr[ra] and ew <= thr[rb]:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
            thr[ra] = ew + k / size[ra]

    min_size = params.min_patch_size
    for a, b in zip(src_l, tgt_l):
        ra = _find(parent, a)
        rb = _find(parent, b)
        if ra == rb:
            continue
        if size[ra] < min_size or size[rb] < min_size:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]

    roots = np.array([_find(parent, i) for i in range(n)], dtype=np.int64)
    _, labels = np.unique(roots, return_inverse=True)
    # renumber by first appearance so label ids are row-major stable
    remap = np.full(int(labels.max()) + 1, -1, dtype=np.int64)
    next_id = 0
    for lab in labels.tolist():
        if remap[lab] < 0:
            remap[lab] = next_id
            next_id += 1
    return remap[labels].reshape(h, w)


def patch_energy(labels: np.ndarray, imap: ImportanceMap) -> PatchMap:
    """Per-patch mean importance over the label partition."""
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape != imap.values.shape:
        raise DimensionMismatch(
            f"label grid {lab.shape} does not match map {imap.values.shape}"
        )
    flat = lab.ravel()
    counts = np.bincount(flat)
    if np.any(counts == 0):
        raise ValueError("label ids must be consecutive with no gaps")
    sums = np.bincount(flat, weights=imap.values.ravel())
    omegas = sums / counts
    patches = tuple(
        Patch(i, int(counts[i]), float(omegas[i])) for i in range(len(counts))
    )
    return PatchMap(lab, patches)
