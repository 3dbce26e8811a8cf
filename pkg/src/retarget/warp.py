"""Continuous retargeting operator: quad-mesh warping.

A regular quad mesh is laid over the image, every quad is tagged with the
patch owning most of its pixels, and the target vertex positions minimize
a weighted sum of per-quad edge energies: a linear-scaling term pulling
edges toward the globally scaled shape, a rigid term pulling edges toward
a per-patch uniform scale, and (for video) a grid-orientation term plus a
temporal tie to the previous frame's solution.  The x and y coordinates
decouple for fixed patch scales, so each solver pass runs two sparse
least-squares solves; patch scales are re-estimated in closed form
between passes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from .energy import EnergyProvider, energy_for_iteration
from .errors import (
    DegenerateMesh,
    DimensionMismatch,
    Foldover,
    FrameDimensionMismatch,
    NonConvergence,
)
from .fields import MESH, DeformationField, MeshStage
from .raster import ImportanceMap, RasterImage, TargetSpec
from .segment import PatchMap, SegmentationParams, patch_energy, segment

__all__ = [
    "MODIFIED_IMAGE",
    "MODIFIED_VIDEO",
    "LEGACY_IMAGE",
    "LEGACY_VIDEO",
    "MeshGrid",
    "WarpEnergyConfig",
    "build_mesh",
    "assemble_energy",
    "solve_warp",
    "render_warp",
    "retarget_video",
]

MODIFIED_IMAGE = "modified-image"
MODIFIED_VIDEO = "modified-video"
LEGACY_IMAGE = "legacy-image"
LEGACY_VIDEO = "legacy-video"
_MODES = (MODIFIED_IMAGE, MODIFIED_VIDEO, LEGACY_IMAGE, LEGACY_VIDEO)
_VIDEO_MODES = (MODIFIED_VIDEO, LEGACY_VIDEO)

_CG_RTOL = 1e-8  # convergence contract: failing this is NonConvergence
_CG_RTOL_INNER = 1e-12  # actually iterate tighter while the budget allows
_CG_MAXITER = 1000
_OUTER_PASSES = 5


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MeshGrid:
    cell_size: int
    source_vertices: np.ndarray  # (nvy, nvx, 2) of (x, y)
    quad_patch: np.ndarray  # (nvy-1, nvx-1) owning patch ids
    quad_omega: np.ndarray  # matching per-quad importance weights
    target_vertices: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "source_vertices", _freeze(np.asarray(self.source_vertices, float))
        )
        object.__setattr__(
            self, "quad_patch", _freeze(np.asarray(self.quad_patch, np.int64))
        )
        object.__setattr__(
            self, "quad_omega", _freeze(np.asarray(self.quad_omega, float))
        )
        if self.target_vertices is not None:
            object.__setattr__(
                self, "target_vertices", _freeze(np.asarray(self.target_vertices, float))
            )

    @property
    def grid_shape(self):
        return self.source_vertices.shape[:2]  # (nvy, nvx)

    def source_size(self):
        return (
            int(round(self.source_vertices[-1, -1, 0])),
            int(round(self.source_vertices[-1, -1, 1])),
        )

    def target_size(self):
        if self.target_vertices is None:
            raise ValueError("mesh has no solved target vertices")
        return (
            int(round(self.target_vertices[-1, -1, 0])),
            int(round(self.target_vertices[-1, -1, 1])),
        )


@dataclass(frozen=True)
class WarpEnergyConfig:
    mode: str = MODIFIED_IMAGE
    alpha: float = 0.8
    temporal_lambda: float = 1.0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown warp mode {self.mode!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.temporal_lambda < 0:
            raise ValueError("temporal_lambda must be >= 0")

    @property
    def is_video(self) -> bool:
        return self.mode in _VIDEO_MODES

    @property
    def is_legacy(self) -> bool:
        return self.mode in (LEGACY_IMAGE, LEGACY_VIDEO)


def _grid_lines(extent: int, cell: int):
    lines = list(range(0, extent, cell))
    lines.append(extent)
    return np.array(lines, dtype=float)


def build_mesh(
    width: int, height: int, patches: PatchMap, cell_size: int = 20
) -> MeshGrid:
    """Regular quad grid over the image with per-quad patch ownership.

    Vertices sit every cell_size pixels, with the last row/column clamped
    to the image border; each quad takes the patch id covering the
    majority of its pixels (ties to the lower id).
    """
    if cell_size < 2:
        raise DegenerateMesh("cell size must be at least 2")
    if patches.labels.shape != (height, width):
        raise DimensionMismatch(
            f"label grid {patches.labels.shape} does not match {height}x{width}"
        )
    xs = _grid_lines(width, cell_size)
    ys = _grid_lines(height, cell_size)
    nvx, nvy = len(xs), len(ys)
    sv = np.empty((nvy, nvx, 2))
    sv[:, :, 0] = xs[None, :]
    sv[:, :, 1] = ys[:, None]

    labels = patches.labels
    quad_patch = np.empty((nvy - 1, nvx - 1), dtype=np.int64)
    for qy in range(nvy - 1):
        y0, y1 = int(ys[qy]), int(ys[qy + 1])
        for qx in range(nvx - 1):
            x0, x1 = int(xs[qx]), int(xs[qx + 1])
            counts = np.bincount(labels[y0:y1, x0:x1].ravel())
            quad_patch[qy, qx] = int(np.argmax(counts))
    omega = patches.omega_by_id()[quad_patch]
    return MeshGrid(cell_size, sv, quad_patch, omega)


def _quad_signed_areas(vertices: np.ndarray) -> np.ndarray:
    """Shoelace area per quad, positive for properly oriented quads in
    screen coordinates (y down)."""
    a = vertices[:-1, :-1]
    b = vertices[:-1, 1:]
    c = vertices[1:, 1:]
    d = vertices[1:, :-1]

    def cr(p, q):
        return p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]

    return 0.5 * (cr(a, b) + cr(b, c) + cr(c, d) + cr(d, a))


def _check_foldover(vertices: np.ndarray):
    areas = _quad_signed_areas(vertices)
    if np.any(areas < 0):
        qy, qx = np.unravel_index(int(np.argmin(areas)), areas.shape)
        raise Foldover(
            f"quad ({qy},{qx}) has negative signed area {areas[qy, qx]:.6g}"
        )


def _edge_rows(n, ei, ej, coeff):
    m = len(coeff)
    r = np.repeat(np.arange(m), 2)
    c = np.empty(2 * m, dtype=np.int64)
    c[0::2] = ei
    c[1::2] = ej
    d = np.empty(2 * m)
    d[0::2] = coeff
    d[1::2] = -coeff
    return sp.coo_matrix((d, (r, c)), shape=(m, n))


class _AxisSystem:
    """Least-squares stack A z ~ b for one coordinate axis.

    The rigid block's right-hand side depends on the per-patch scales and
    is rebuilt on demand; everything else is fixed at assembly time.
    Constrained variables are eliminated before the normal equations.
    """

    def __init__(self, blocks, b_parts, rigid_slice, rigid_base, rigid_patch,
                 fixed_mask, fixed_vals):
        self.A = sp.vstack(blocks).tocsr()
        self.b0 = np.concatenate(b_parts)
        self.rigid_slice = rigid_slice
        self.rigid_base = rigid_base
        self.rigid_patch = rigid_patch
        self.fixed_mask = fixed_mask
        self.fixed_vals = fixed_vals
        self.free = ~fixed_mask
        self.n_free = int(self.free.sum())
        self.Af = self.A[:, self.free].tocsr()
        self.fixed_contrib = self.A[:, fixed_mask] @ fixed_vals[fixed_mask]
        self.N = (self.Af.T @ self.Af).tocsr()
        diag = self.N.diagonal()
        self.pre = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)

    def rhs(self, scales):
        b = self.b0.copy()
        b[self.rigid_slice] = self.rigid_base * scales[self.rigid_patch]
        return b

    def value(self, z, scales):
        r = self.A @ z - self.rhs(scales)
        return float(r @ r)

    def gradient(self, z, scales):
        return 2.0 * (self.A.T @ (self.A @ z - self.rhs(scales)))

    def solve(self, z, scales):
        rhs_n = self.Af.T @ (self.rhs(scales) - self.fixed_contrib)
        pre = self.pre
        M = LinearOperator(
            (self.n_free, self.n_free), matvec=lambda v: pre * v, dtype=float
        )
        x, info = cg(
            self.N, rhs_n, x0=z[self.free],
            rtol=_CG_RTOL_INNER, atol=0.0, maxiter=_CG_MAXITER, M=M,
        )
        if info > 0:
            # the budget ran out chasing the tight target; the documented
            # residual is the pass/fail line
            res = float(np.linalg.norm(self.N @ x - rhs_n))
            if res <= _CG_RTOL * float(np.linalg.norm(rhs_n)):
                info = 0
        out = z.copy()
        out[self.free] = x
        out[self.fixed_mask] = self.fixed_vals[self.fixed_mask]
        return out, int(info)


class WarpObjective:
    """Quadratic objective in the target vertices, split per axis."""

    def __init__(self, mesh, target, cfg, prev_vertices=None):
        nvy, nvx = mesh.grid_shape
        sw_px, sh_px = mesh.source_size()
        self.mesh = mesh
        self.cfg = cfg
        self.target_w = float(target.target_width)
        self.target_h = float(target.target_height)
        self.scale_x = self.target_w / sw_px
        self.scale_y = self.target_h / sh_px
        self.n_patches = int(mesh.quad_patch.max()) + 1
        n = nvy * nvx

        # per-quad edge occurrences: top, bottom, left, right sides
        qy, qx = np.meshgrid(np.arange(nvy - 1), np.arange(nvx - 1), indexing="ij")

        def vid(vy, vx):
            return (vy * nvx + vx).ravel()

        tl, tr = vid(qy, qx), vid(qy, qx + 1)
        bl, br = vid(qy + 1, qx), vid(qy + 1, qx + 1)
        self.ei = np.concatenate([tl, bl, tl, tr])
        self.ej = np.concatenate([tr, br, bl, br])
        nq = tl.size
        self.horizontal = np.zeros(4 * nq, dtype=bool)
        self.horizontal[: 2 * nq] = True
        self.patch_occ = np.tile(mesh.quad_patch.ravel(), 4)
        omega_occ = np.tile(mesh.quad_omega.ravel(), 4)

        flat = mesh.source_vertices.reshape(n, 2)
        self.sdx = flat[self.ei, 0] - flat[self.ej, 0]
        self.sdy = flat[self.ei, 1] - flat[self.ej, 1]

        if cfg.is_legacy:
            w_rigid = np.full(4 * nq, cfg.alpha)
            w_scale = np.full(4 * nq, 1.0 - cfg.alpha)
        else:
            w_rigid = omega_occ
            w_scale = 1.0 - omega_occ
        self.w_rigid_sqrt = np.sqrt(w_rigid)
        self.w_scale_sqrt = np.sqrt(w_scale)

        vy_idx, vx_idx = np.meshgrid(np.arange(nvy), np.arange(nvx), indexing="ij")
        fixed_x = ((vx_idx == 0) | (vx_idx == nvx - 1)).ravel()
        fixed_y = ((vy_idx == 0) | (vy_idx == nvy - 1)).ravel()
        fixed_vals_x = np.where((vx_idx == nvx - 1).ravel(), self.target_w, 0.0)
        fixed_vals_y = np.where((vy_idx == nvy - 1).ravel(), self.target_h, 0.0)

        self.prev = None
        if prev_vertices is not None:
            self.prev = np.asarray(prev_vertices, float).reshape(n, 2)

        self.x_sys = self._build_axis(
            n, self.sdx, self.scale_x, ~self.horizontal, fixed_x, fixed_vals_x, 0
        )
        self.y_sys = self._build_axis(
            n, self.sdy, self.scale_y, self.horizontal, fixed_y, fixed_vals_y, 1
        )

    def _build_axis(self, n, sdelta, factor, ori_mask, fixed_mask, fixed_vals, coord):
        cfg = self.cfg
        blocks = [
            _edge_rows(n, self.ei, self.ej, self.w_scale_sqrt),
            _edge_rows(n, self.ei, self.ej, self.w_rigid_sqrt),
        ]
        b_parts = [self.w_scale_sqrt * factor * sdelta]
        m1 = len(sdelta)
        rigid_slice = slice(m1, 2 * m1)
        rigid_base = self.w_rigid_sqrt * sdelta
        b_parts.append(np.zeros(m1))  # rebuilt from scales on demand
        if cfg.is_video:
            # keep grid lines axis-aligned: penalize the cross coordinate
            # of every edge that is axis-aligned in the source
            ones = np.ones(int(ori_mask.sum()))
            blocks.append(
                _edge_rows(n, self.ei[ori_mask], self.ej[ori_mask], ones)
            )
            b_parts.append(np.zeros(len(ones)))
        if cfg.is_video and self.prev is not None and cfg.temporal_lambda > 0:
            lam = np.sqrt(cfg.temporal_lambda)
            eye = sp.coo_matrix(
                (np.full(n, lam), (np.arange(n), np.arange(n))), shape=(n, n)
            )
            blocks.append(eye)
            b_parts.append(lam * self.prev[:, coord])
        return _AxisSystem(
            blocks, b_parts, rigid_slice, rigid_base, self.patch_occ,
            fixed_mask, fixed_vals,
        )

    def initial_vertices(self) -> np.ndarray:
        v = self.mesh.source_vertices * np.array([self.scale_x, self.scale_y])
        v = v.copy()
        v[:, 0, 0] = 0.0
        v[:, -1, 0] = self.target_w
        v[0, :, 1] = 0.0
        v[-1, :, 1] = self.target_h
        return v

    def estimate_scales(self, vertices: np.ndarray) -> np.ndarray:
        """Closed-form per-patch uniform scale: least-squares ratio of
        current edge vectors to source edge vectors."""
        flat = np.asarray(vertices, float).reshape(-1, 2)
        dxt = flat[self.ei, 0] - flat[self.ej, 0]
        dyt = flat[self.ei, 1] - flat[self.ej, 1]
        num = np.bincount(
            self.patch_occ, weights=dxt * self.sdx + dyt * self.sdy,
            minlength=self.n_patches,
        )
        den = np.bincount(
            self.patch_occ, weights=self.sdx**2 + self.sdy**2,
            minlength=self.n_patches,
        )
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)

    def value(self, vertices: np.ndarray, scales: np.ndarray) -> float:
        flat = np.asarray(vertices, float).reshape(-1, 2)
        return self.x_sys.value(flat[:, 0], scales) + self.y_sys.value(
            flat[:, 1], scales
        )

    def gradient(self, vertices: np.ndarray, scales: np.ndarray) -> np.ndarray:
        flat = np.asarray(vertices, float).reshape(-1, 2)
        g = np.stack(
            [
                self.x_sys.gradient(flat[:, 0], scales),
                self.y_sys.gradient(flat[:, 1], scales),
            ],
            axis=1,
        )
        return g.reshape(vertices.shape)

    def constrained_gradient(self, vertices: np.ndarray, scales: np.ndarray) -> np.ndarray:
        g = self.gradient(vertices, scales).reshape(-1, 2)
        g[self.x_sys.fixed_mask, 0] = 0.0
        g[self.y_sys.fixed_mask, 1] = 0.0
        return g.reshape(np.asarray(vertices).shape)

    def solve_pass(self, vertices: np.ndarray, scales: np.ndarray):
        flat = np.asarray(vertices, float).reshape(-1, 2)
        zx, ix = self.x_sys.solve(flat[:, 0].copy(), scales)
        zy, iy = self.y_sys.solve(flat[:, 1].copy(), scales)
        out = np.stack([zx, zy], axis=1).reshape(np.asarray(vertices).shape)
        return out, ix, iy


def assemble_energy(
    mesh: MeshGrid,
    target: TargetSpec,
    cfg: WarpEnergyConfig,
    prev_vertices: np.ndarray | None = None,
) -> WarpObjective:
    """Build the quadratic vertex objective for the given target size."""
    return WarpObjective(mesh, target, cfg, prev_vertices)


def _alternate(obj: WarpObjective, v0: np.ndarray, passes: int):
    """Refresh scales from the current vertices, then solve; repeat.

    Ending on a solve means the returned vertices minimize the final
    quadratic, so its constrained gradient vanishes there.
    """
    v = v0
    scales = None
    ix = iy = 0
    for _ in range(passes):
        scales = obj.estimate_scales(v)
        v, ix, iy = obj.solve_pass(v, scales)
    if ix > 0 or iy > 0:
        raise NonConvergence("conjugate gradient did not reach the residual target")
    return v, scales


def solve_warp(
    mesh: MeshGrid,
    target: TargetSpec,
    cfg: WarpEnergyConfig,
    passes: int = _OUTER_PASSES,
) -> MeshGrid:
    """Minimize the warp objective under border constraints.

    Corner vertices are pinned to the target corners and border vertices
    slide along their border line; the rest are free.  Fold-overs in the
    solution are reported, never repaired.
    """
    obj = assemble_energy(mesh, target, cfg)
    v, _ = _alternate(obj, obj.initial_vertices(), passes)
    _check_foldover(v)
    return replace(mesh, target_vertices=v)


def _inverse_bilinear(px, py, a, b, c, d, tol):
    """Local (u, v) of points inside quad a-b-c-d (corner loop order).

    Solves the standard two-root inverse of the bilinear patch; points
    with no admissible root come back NaN.
    """
    e = b - a
    f = d - a
    g = a - b + c - d
    hx = px - a[0]
    hy = py - a[1]
    k2 = g[0] * f[1] - g[1] * f[0]
    k1 = (e[0] * f[1] - e[1] * f[0]) + (hx * g[1] - hy * g[0])
    k0 = hx * e[1] - hy * e[0]

    def u_for(v):
        den_x = e[0] + g[0] * v
        den_y = e[1] + g[1] * v
        use_x = np.abs(den_x) >= np.abs(den_y)
        den = np.where(use_x, den_x, den_y)
        num = np.where(use_x, hx - f[0] * v, hy - f[1] * v)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den != 0, num / den, np.nan)

    scale = abs(e[0] * f[1] - e[1] * f[0]) + 1.0
    if abs(k2) <= 1e-12 * scale:
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(k1 != 0, -k0 / k1, np.nan)
        return u_for(v), v

    with np.errstate(invalid="ignore"):
        disc = k1 * k1 - 4.0 * k0 * k2
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        v1 = np.where(ok, (-k1 - sq) / (2.0 * k2), np.nan)
        v2 = np.where(ok, (-k1 + sq) / (2.0 * k2), np.nan)
    u1 = u_for(v1)
    u2 = u_for(v2)
    in1 = (
        np.isfinite(u1) & np.isfinite(v1)
        & (u1 >= -tol) & (u1 <= 1 + tol) & (v1 >= -tol) & (v1 <= 1 + tol)
    )
    u = np.where(in1, u1, u2)
    v = np.where(in1, v1, v2)
    return u, v


def _bilinear_point(u, v, a, b, c, d):
    """Forward bilinear map for corners in loop order a-b-c-d."""
    return (
        ((1 - u) * (1 - v))[..., None] * a
        + (u * (1 - v))[..., None] * b
        + (u * v)[..., None] * c
        + ((1 - u) * v)[..., None] * d
    )


def _sample_bilinear(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Half-pixel-center bilinear sampling of (h, w, 3) uint8 pixels at
    continuous image coordinates."""
    h, w = pixels.shape[:2]
    fx = np.clip(xs - 0.5, 0.0, w - 1.0)
    fy = np.clip(ys - 0.5, 0.0, h - 1.0)
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = (fx - x0)[..., None]
    ty = (fy - y0)[..., None]
    p = pixels.astype(np.float64)
    top = (1 - tx) * p[y0, x0] + tx * p[y0, x1]
    bot = (1 - tx) * p[y1, x0] + tx * p[y1, x1]
    return (1 - ty) * top + ty * bot


def render_warp(img: RasterImage, mesh: MeshGrid):
    """Resample the image through the solved mesh.

    Each target pixel center is inverse-mapped through its containing
    deformed quad (first claim wins, quads in row-major order) and the
    source is sampled bilinearly at the corresponding point.
    """
    if mesh.target_vertices is None:
        raise ValueError("render_warp needs a solved mesh")
    tv = mesh.target_vertices
    sv = mesh.source_vertices
    _check_foldover(tv)
    out_w, out_h = mesh.target_size()
    if out_w < 1 or out_h < 1:
        raise DimensionMismatch("mesh target size is empty")
    nvy, nvx = mesh.grid_shape

    claimed = np.zeros((out_h, out_w), dtype=bool)
    src_x = np.zeros((out_h, out_w))
    src_y = np.zeros((out_h, out_w))

    def quad_corners(grid, qy, qx):
        return (
            grid[qy, qx].astype(float),
            grid[qy, qx + 1].astype(float),
            grid[qy + 1, qx + 1].astype(float),
            grid[qy + 1, qx].astype(float),
        )

    for tol in (1e-9, 1e-6):
        if claimed.all():
            break
        for qy in range(nvy - 1):
            for qx in range(nvx - 1):
                a, b, c, d = quad_corners(tv, qy, qx)
                xs_c = np.array([a[0], b[0], c[0], d[0]])
                ys_c = np.array([a[1], b[1], c[1], d[1]])
                px0 = max(0, int(np.floor(xs_c.min() - tol - 0.5)) + 1)
                px1 = min(out_w - 1, int(np.floor(xs_c.max() + tol - 0.5)))
                py0 = max(0, int(np.floor(ys_c.min() - tol - 0.5)) + 1)
                py1 = min(out_h - 1, int(np.floor(ys_c.max() + tol - 0.5)))
                if px1 < px0 or py1 < py0:
                    continue
                sub = claimed[py0 : py1 + 1, px0 : px1 + 1]
                if sub.all():
                    continue
                gx, gy = np.meshgrid(
                    np.arange(px0, px1 + 1) + 0.5,
                    np.arange(py0, py1 + 1) + 0.5,
                )
                u, v = _inverse_bilinear(gx, gy, a, b, c, d, tol)
                inside = (
                    np.isfinite(u) & np.isfinite(v)
                    & (u >= -tol) & (u <= 1 + tol)
                    & (v >= -tol) & (v <= 1 + tol)
                    & ~sub
                )
                if not inside.any():
                    continue
                uu = np.clip(u[inside], 0.0, 1.0)
                vv = np.clip(v[inside], 0.0, 1.0)
                sa, sb, sc, sd = quad_corners(sv, qy, qx)
                pts = _bilinear_point(uu, vv, sa, sb, sc, sd)
                ys_i, xs_i = np.nonzero(inside)
                src_x[py0 + ys_i, px0 + xs_i] = pts[:, 0]
                src_y[py0 + ys_i, px0 + xs_i] = pts[:, 1]
                claimed[py0 + ys_i, px0 + xs_i] = True

    if not claimed.all():
        # numerical cracks: snap each orphan to the closest clamped quad point
        ys_o, xs_o = np.nonzero(~claimed)
        for py, px in zip(ys_o.tolist(), xs_o.tolist()):
            cx, cy = px + 0.5, py + 0.5
            best = None
            for qy in range(nvy - 1):
                for qx in range(nvx - 1):
                    a, b, c, d = quad_corners(tv, qy, qx)
                    u, v = _inverse_bilinear(
                        np.array([cx]), np.array([cy]), a, b, c, d, 1.0
                    )
                    if not (np.isfinite(u[0]) and np.isfinite(v[0])):
                        u = np.array([0.5])
                        v = np.array([0.5])
                    uu = float(np.clip(u[0], 0.0, 1.0))
                    vv = float(np.clip(v[0], 0.0, 1.0))
                    pt = _bilinear_point(np.array([uu]), np.array([vv]), a, b, c, d)[0]
                    dist = (pt[0] - cx) ** 2 + (pt[1] - cy) ** 2
                    if best is None or dist < best[0]:
                        sa, sb, sc, sd = quad_corners(sv, qy, qx)
                        spt = _bilinear_point(
                            np.array([uu]), np.array([vv]), sa, sb, sc, sd
                        )[0]
                        best = (dist, spt)
            src_x[py, px] = best[1][0]
            src_y[py, px] = best[1][1]

    sampled = _sample_bilinear(img.pixels, src_x, src_y)
    out = RasterImage(np.rint(sampled).astype(np.uint8))
    stage = MeshStage(mesh.cell_size, sv, tv)
    return out, DeformationField(MESH, meshes=(stage,))


def _mesh_with_omega(base: MeshGrid, patches: PatchMap) -> MeshGrid:
    omega = patches.omega_by_id()[base.quad_patch]
    return MeshGrid(base.cell_size, base.source_vertices, base.quad_patch, omega)


def retarget_video(
    frames,
    provider: EnergyProvider,
    target: TargetSpec,
    cfg: WarpEnergyConfig,
    seg_params: SegmentationParams = SegmentationParams(),
    cell_size: int = 20,
    initial_map: ImportanceMap | None = None,
):
    """Warp an ordered frame sequence to the target size.

    Segmentation comes from the first frame and is reused for the shot.
    Frame 0 solves like a still image (with the orientation term); later
    frames run one warm-started solve with the previous frame's solution
    as temporal anchor and its converged patch scales carried over.
    Importance maps are exponentially smoothed across frames (decay 0.5).
    """
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one frame")
    if not cfg.is_video:
        raise ValueError("video retargeting needs a video energy mode")
    w, h = frames[0].width, frames[0].height
    for i, f in enumerate(frames[1:], start=1):
        if (f.width, f.height) != (w, h):
            raise FrameDimensionMismatch(
                f"frame {i} is {f.width}x{f.height}, expected {w}x{h}"
            )

    labels = segment(frames[0], seg_params)
    base_mesh = None
    ema = None
    prev_v = None
    scales = None
    outs, fields = [], []
    for i, frame in enumerate(frames):
        raw = energy_for_iteration(provider, frame, initial_map)
        ema = raw.values if ema is None else 0.5 * ema + 0.5 * raw.values
        pm = patch_energy(labels, ImportanceMap(ema))
        if base_mesh is None:
            base_mesh = build_mesh(w, h, pm, cell_size)
        mesh = _mesh_with_omega(base_mesh, pm)
        if i == 0:
            obj = assemble_energy(mesh, target, cfg)
            v, scales = _alternate(obj, obj.initial_vertices(), _OUTER_PASSES)
        else:
            obj = assemble_energy(mesh, target, cfg, prev_vertices=prev_v)
            v, ix, iy = obj.solve_pass(prev_v, scales)
            if ix > 0 or iy > 0:
                raise NonConvergence(
                    "conjugate gradient did not reach the residual target"
                )
        _check_foldover(v)
        solved = replace(mesh, target_vertices=v)
        out, field = render_warp(frame, solved)
        outs.append(out)
        fields.append(field)
        prev_v = v
    return outs, fields
