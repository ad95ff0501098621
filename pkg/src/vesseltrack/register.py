"""Key-to-current frame registration, annotation mapping and the spatial
tracking-range mask.

Registration is 3-level coarse-to-fine block matching (16 px blocks, +-8 px
search per level, normalized cross-correlation), followed by weighted
Gaussian smoothing of the sparse displacement grid and bilinear upsampling
to a dense field.  The field maps a key-frame location to its current-frame
location; it only has to be good enough to seed the sigma-bounded search,
stronger registrations can be imported from file instead
(:func:`vesseltrack.io.load_deformation_field`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .core import Polyline, VesselAnnotation, as_polyline, rasterize_polyline

__all__ = ["DeformationField", "register", "map_annotation", "tracking_range"]

BLOCK = 16
SEARCH_RADIUS = 8
LEVEL_FACTORS = (4, 2, 1)
SMOOTH_STD_PX = 4.0
MIN_NCC = 0.25


@dataclass
class DeformationField:
    """Dense per-pixel displacement, ``dx``/``dy`` in pixels, shape (H, W)."""

    dx: np.ndarray
    dy: np.ndarray
    fallback_identity: bool = False

    def __post_init__(self):
        if self.dx.shape != self.dy.shape:
            raise ValueError("dx and dy must have the same shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.dx.shape

    @classmethod
    def identity(cls, shape, fallback: bool = False) -> "DeformationField":
        z = np.zeros(shape, dtype=np.float64)
        return cls(dx=z.copy(), dy=z, fallback_identity=fallback)

    def sample(self, points: np.ndarray) -> np.ndarray:
        """Bilinear (dx, dy) at float (x, y) positions, edge-replicated."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        coords = np.stack([pts[:, 1], pts[:, 0]])  # map_coordinates wants (y, x)
        dx = ndimage.map_coordinates(self.dx, coords, order=1, mode="nearest")
        dy = ndimage.map_coordinates(self.dy, coords, order=1, mode="nearest")
        return np.column_stack([dx, dy])


def _downsample(img: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return img
    h, w = img.shape
    hc, wc = (h // factor) * factor, (w // factor) * factor
    return img[:hc, :wc].reshape(hc // factor, factor, wc // factor, factor).mean(axis=(1, 3))


def _warp_current(cur: np.ndarray, field: DeformationField) -> np.ndarray:
    h, w = cur.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return ndimage.map_coordinates(cur, [yy + field.dy, xx + field.dx], order=1, mode="nearest")


def register(key: np.ndarray, cur: np.ndarray, max_displacement: float = 32.0) -> DeformationField:
    """Estimate the dense displacement field taking ``key`` onto ``cur``.

    Falls back to the identity field (``fallback_identity`` set) when no
    block produced a confident match or when warping fails to improve the
    mean squared intensity difference over the identity field.
    """
    key = np.asarray(key, dtype=np.float64)
    cur = np.asarray(cur, dtype=np.float64)
    if key.shape != cur.shape:
        raise ValueError(f"frame dimensions differ: {key.shape} vs {cur.shape}")
    h, w = key.shape
    if min(h, w) < BLOCK * 2:
        return DeformationField.identity(key.shape, fallback=True)

    dense_dx = np.zeros(key.shape)
    dense_dy = np.zeros(key.shape)
    any_valid = False
    for f in LEVEL_FACTORS:
        kf = _downsample(key, f)
        cf = _downsample(cur, f)
        hf, wf = kf.shape
        if min(hf, wf) < BLOCK:
            continue
        ys0 = np.arange(0, hf - BLOCK + 1, BLOCK, dtype=np.int64)
        xs0 = np.arange(0, wf - BLOCK + 1, BLOCK, dtype=np.int64)
        gy, gx = np.meshgrid(ys0, xs0, indexing="ij")
        ys, xs = gy.ravel(), gx.ravel()
        cy = np.minimum(ys + BLOCK // 2, hf - 1)
        cx = np.minimum(xs + BLOCK // 2, wf - 1)
        # seed each block from the running full-resolution estimate
        init_dx = np.rint(dense_dx[cy * f, cx * f] / f).astype(np.int64)
        init_dy = np.rint(dense_dy[cy * f, cx * f] / f).astype(np.int64)
        bdy, bdx, score = _kernels.block_match(kf, cf, ys, xs, init_dy, init_dx, BLOCK, SEARCH_RADIUS)
        valid = score >= MIN_NCC
        if not valid.any():
            continue
        any_valid = True
        ny, nx = len(ys0), len(xs0)
        gdx = (bdx * f).astype(np.float64).reshape(ny, nx)
        gdy = (bdy * f).astype(np.float64).reshape(ny, nx)
        wgt = np.where(valid, np.maximum(score, 0.0), 0.0).reshape(ny, nx)
        # normalized-convolution smoothing; sigma floored at one grid cell so
        # unconfident blocks are filled from their neighbors
        sig = max(1.0, SMOOTH_STD_PX / (BLOCK * f))
        den = ndimage.gaussian_filter(wgt, sig, mode="nearest")
        sdx = np.where(den > 1e-9, ndimage.gaussian_filter(gdx * wgt, sig, mode="nearest") / np.maximum(den, 1e-9), 0.0)
        sdy = np.where(den > 1e-9, ndimage.gaussian_filter(gdy * wgt, sig, mode="nearest") / np.maximum(den, 1e-9), 0.0)
        dense_dx = _upsample_grid(sdx, (cy * f, cx * f), key.shape)
        dense_dy = _upsample_grid(sdy, (cy * f, cx * f), key.shape)

    if not any_valid:
        return DeformationField.identity(key.shape, fallback=True)

    dense_dx = np.clip(ndimage.gaussian_filter(dense_dx, SMOOTH_STD_PX), -max_displacement, max_displacement)
    dense_dy = np.clip(ndimage.gaussian_filter(dense_dy, SMOOTH_STD_PX), -max_displacement, max_displacement)
    field = DeformationField(dx=dense_dx, dy=dense_dy)

    mse_id = float(np.mean((key - cur) ** 2))
    mse_warp = float(np.mean((key - _warp_current(cur, field)) ** 2))
    if mse_warp > mse_id + 1e-12:
        return DeformationField.identity(key.shape, fallback=True)
    return field


def _upsample_grid(grid: np.ndarray, centers: tuple[np.ndarray, np.ndarray], shape) -> np.ndarray:
    """Bilinear upsample a sparse grid whose nodes sit at full-resolution
    block centers (edge-extended beyond the first/last center)."""
    ny, nx = grid.shape
    cys = np.unique(centers[0])
    cxs = np.unique(centers[1])
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    fy = np.interp(yy[:, 0], cys, np.arange(ny, dtype=np.float64))
    fx = np.interp(xx[0, :], cxs, np.arange(nx, dtype=np.float64))
    gy, gx = np.meshgrid(fy, fx, indexing="ij")
    return ndimage.map_coordinates(grid, [gy, gx], order=1, mode="nearest")


def map_annotation(ann: VesselAnnotation, field: DeformationField) -> VesselAnnotation:
    """Displace every annotation point through the field (bilinear sampled).

    Branch structure and point order are preserved; results falling outside
    the frame are clamped to its bounds.
    """
    h, w = field.shape

    def _map(branch: Polyline) -> Polyline:
        disp = field.sample(branch)
        moved = branch + disp
        moved[:, 0] = np.clip(moved[:, 0], 0.0, w - 1.0)
        moved[:, 1] = np.clip(moved[:, 1], 0.0, h - 1.0)
        try:
            return as_polyline(moved)
        except ValueError:
            # clamping collapsed the branch; keep a minimal two-point stub
            # nudged toward the frame interior
            a = moved[0]
            b = moved[-1]
            if np.all(b == a):
                shift = 1e-3 if a[0] < (w - 1.0) / 2 else -1e-3
                b = a + np.array([shift, 0.0])
            return np.vstack([a, b])

    return ann.mapped(_map)


def tracking_range(branch, sigma: float, shape: tuple[int, int]) -> np.ndarray:
    """Boolean mask of pixels within Euclidean distance ``sigma`` of the
    rasterized branch."""
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    raster = rasterize_polyline(branch, shape)
    if not raster.any():
        return np.zeros(shape, dtype=bool)
    dist = ndimage.distance_transform_edt(~raster)
    return dist <= sigma
