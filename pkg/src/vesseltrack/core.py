"""Shared domain types and elementary polyline geometry.

Conventions used across the package:

* images are 2D float arrays indexed ``[y, x]`` with intensities in [0, 1]
* points and polylines store ``(x, y)`` pixel coordinates as floats,
  sub-pixel positions are legal everywhere; rasterization happens only at
  mask and rendering boundaries
* polylines are open curves with at least two points and a pixel-chain
  density of at most 2 px (Chebyshev) between consecutive points
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "Polyline",
    "VesselAnnotation",
    "TrackerConfig",
    "DaisyParams",
    "as_frame",
    "as_polyline",
    "arclength",
    "resample_polyline",
    "densify_polyline",
    "bresenham_line",
    "rasterize_polyline",
]

# A Polyline is an (N, 2) float64 array of (x, y) coordinates.
Polyline = np.ndarray

CHAIN_STEP = 2.0  # max Chebyshev gap between consecutive polyline points


def as_frame(img) -> np.ndarray:
    """Validate a 2D grayscale frame with intensities in [0, 1]."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"frame must be a non-empty 2D array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("frame contains non-finite intensities")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ValueError("frame intensities must lie in [0, 1]")
    return a


def as_polyline(points, *, dedupe: bool = True) -> Polyline:
    """Coerce ``points`` to an (N, 2) float64 polyline.

    Consecutive duplicate points are dropped when ``dedupe`` is set.  Raises
    if fewer than two distinct points remain or coordinates are non-finite.
    """
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"polyline must be (N, 2), got shape {p.shape}")
    if not np.isfinite(p).all():
        raise ValueError("polyline contains non-finite coordinates")
    if dedupe and len(p) > 1:
        keep = np.ones(len(p), dtype=bool)
        keep[1:] = np.any(p[1:] != p[:-1], axis=1)
        p = p[keep]
    if len(p) < 2:
        raise ValueError("polyline needs at least two distinct points")
    return p


def arclength(p: Polyline) -> float:
    """Total Euclidean length along the polyline."""
    p = np.asarray(p, dtype=np.float64)
    if len(p) < 2:
        return 0.0
    return float(np.hypot(*(p[1:] - p[:-1]).T).sum())


def _cumulative_arclength(p: np.ndarray) -> np.ndarray:
    seg = np.hypot(*(p[1:] - p[:-1]).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample_polyline(p: Polyline, spacing: float = 1.0) -> Polyline:
    """Resample ``p`` to (near-)uniform arc-length spacing.

    The output points lie exactly on the input polyline, the two endpoints
    are preserved bit-for-bit, and the number of intervals is
    ``round(arclength / spacing)`` so actual spacing stays within half a
    pixel of the request.  A polyline shorter than ``spacing`` collapses to
    its two endpoints.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    p = as_polyline(p)
    cum = _cumulative_arclength(p)
    total = float(cum[-1])
    k = int(round(total / spacing))
    if total < spacing or k <= 1:
        return np.vstack([p[0], p[-1]])
    stations = np.linspace(0.0, total, k + 1)
    idx = np.searchsorted(cum, stations, side="right") - 1
    idx = np.clip(idx, 0, len(p) - 2)
    seg_len = cum[idx + 1] - cum[idx]
    t = np.where(seg_len > 0, (stations - cum[idx]) / np.where(seg_len > 0, seg_len, 1.0), 0.0)
    out = p[idx] + t[:, None] * (p[idx + 1] - p[idx])
    out[0] = p[0]
    out[-1] = p[-1]
    return as_polyline(out)


def densify_polyline(p: Polyline, max_step: float = CHAIN_STEP) -> Polyline:
    """Insert linearly interpolated points so no Chebyshev gap exceeds ``max_step``."""
    p = as_polyline(p)
    cheb = np.abs(p[1:] - p[:-1]).max(axis=1)
    if cheb.max() <= max_step:
        return p
    pieces = [p[:1]]
    for a, b, g in zip(p[:-1], p[1:], cheb):
        n = int(math.ceil(g / max_step))
        t = np.arange(1, n + 1, dtype=np.float64)[:, None] / n
        pieces.append(a + t * (b - a))
    return as_polyline(np.vstack(pieces))


def bresenham_line(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer pixels of the Bresenham line from (x0, y0) to (x1, y1), inclusive."""
    pixels = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        pixels.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return pixels


def rasterize_polyline(p, shape: tuple[int, int]) -> np.ndarray:
    """Rasterize a polyline into a boolean mask via Bresenham segments.

    Accepts degenerate single-point inputs; pixels outside ``shape`` are
    silently dropped.
    """
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    pts = np.atleast_2d(np.asarray(p, dtype=np.float64))
    ij = np.rint(pts).astype(np.int64)
    if len(ij) == 1:
        x, y = ij[0]
        if 0 <= x < w and 0 <= y < h:
            mask[y, x] = True
        return mask
    for (x0, y0), (x1, y1) in zip(ij[:-1], ij[1:]):
        for x, y in bresenham_line(int(x0), int(y0), int(x1), int(y1)):
            if 0 <= x < w and 0 <= y < h:
                mask[y, x] = True
    return mask


@dataclass(frozen=True)
class VesselAnnotation:
    """Ordered per-branch point lists for one frame of a sequence."""

    branches: list[Polyline]
    frame_index: int = 0

    def __post_init__(self):
        if not self.branches:
            raise ValueError("annotation needs at least one branch")
        coerced = [as_polyline(b) for b in self.branches]
        for b in coerced:
            b.setflags(write=False)
        object.__setattr__(self, "branches", coerced)

    def mapped(self, fn) -> "VesselAnnotation":
        """New annotation with ``fn`` applied to every branch."""
        return VesselAnnotation([fn(b) for b in self.branches], self.frame_index)

    def with_frame(self, frame_index: int) -> "VesselAnnotation":
        return VesselAnnotation(list(self.branches), frame_index)

    def all_points(self) -> np.ndarray:
        return np.vstack(self.branches)


@dataclass(frozen=True)
class DaisyParams:
    """Ring-layout descriptor geometry: center plus ``rings`` rings of
    ``ring_samples`` histogram blocks with ``bins`` orientation bins each."""

    radius: float = 15.0
    rings: int = 3
    ring_samples: int = 8
    bins: int = 8

    @property
    def length(self) -> int:
        return (self.rings * self.ring_samples + 1) * self.bins


@dataclass(frozen=True)
class TrackerConfig:
    """Knobs shared across the tracking pipeline.

    ``sigma`` is the tracking-range dilation radius, ``n_nearest`` the number
    of nearest segments used to pick candidate endpoints, ``rho`` the
    evaluation tolerance.  The remaining fields control centerline
    extraction, gap repair, path enumeration and the descriptor.
    """

    sigma: float = 5.0
    n_nearest: int = 2
    rho: float = 3.0
    scales: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    max_gap: float = 10.0
    max_paths: int = 512
    daisy: DaisyParams = field(default_factory=DaisyParams)
    nms_threshold: float | None = None  # None selects Otsu, floored at 0.05
    snap_radius: float = 3.0
    gap_weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    gap_cost_ceiling: float = -math.log(0.2)
    fusion: bool = True
    resample_spacing: float = 1.0
    max_displacement: float = 32.0

    def __post_init__(self):
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        if self.n_nearest < 1:
            raise ValueError("n_nearest must be >= 1")
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.max_paths < 1:
            raise ValueError("max_paths must be >= 1")
        if not self.scales or min(self.scales) < 0.5:
            raise ValueError("scales must be non-empty with every scale >= 0.5")
        if self.max_gap < 1:
            raise ValueError("max_gap must be >= 1")

    def updated(self, **kw) -> "TrackerConfig":
        return replace(self, **kw)
