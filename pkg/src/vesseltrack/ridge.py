"""Multi-scale Hessian ridge filtering and direction-aware non-maximum
suppression producing one-pixel-wide centerlines.

The filter targets dark tubes on a bright background (contrast agent under
X-ray).  Per scale, the response is the classic two-eigenvalue vesselness
with beta = 0.5 and the structureness constant set to half the maximum
Hessian norm of the frame at that scale; the final map is the maximum over
scales, normalized to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels

__all__ = ["RidgeResponse", "vesselness", "extract_centerline", "otsu_threshold",
           "prune_skeleton", "tidy_skeleton"]

BETA = 0.5
THRESHOLD_FLOOR = 0.05
MIN_SPUR = 4


@dataclass
class RidgeResponse:
    """Per-pixel tubular response in [0, 1], tube direction angle in
    [0, pi), and the scale that produced the strongest response."""

    response: np.ndarray
    orientation: np.ndarray
    best_scale: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.response.shape


def vesselness(frame: np.ndarray, scales=(1.0, 2.0, 3.0, 4.0)) -> RidgeResponse:
    """Maximum-over-scales Hessian vesselness for dark ridges.

    Orientation is the eigenvector of the smaller-magnitude eigenvalue at
    the winning scale (the direction along the tube).  A constant frame
    yields an all-zero response.
    """
    img = np.asarray(frame, dtype=np.float64)
    scales = tuple(float(s) for s in scales)
    if not scales or min(scales) < 0.5:
        raise ValueError("scales must be non-empty with every scale >= 0.5")
    # remove the DC level: sampled derivative kernels have a tiny nonzero
    # sum, so a raw intensity offset would bleed into the Hessian
    img = img - img.mean()

    best = np.zeros(img.shape)
    best_theta = np.zeros(img.shape)
    best_scale = np.full(img.shape, scales[0])
    for s in scales:
        # scale-normalized second derivatives (gamma = 2)
        hxx = ndimage.gaussian_filter(img, s, order=(0, 2)) * s * s
        hyy = ndimage.gaussian_filter(img, s, order=(2, 0)) * s * s
        hxy = ndimage.gaussian_filter(img, s, order=(1, 1)) * s * s

        half_diff = 0.5 * (hxx - hyy)
        mean = 0.5 * (hxx + hyy)
        root = np.sqrt(half_diff * half_diff + hxy * hxy)
        lam_hi = mean + root
        lam_lo = mean - root
        swap = np.abs(lam_lo) > np.abs(lam_hi)
        lam1 = np.where(swap, lam_hi, lam_lo)   # smaller magnitude
        lam2 = np.where(swap, lam_lo, lam_hi)   # larger magnitude

        structness = np.sqrt(lam1 * lam1 + lam2 * lam2)
        cmax = structness.max()
        if cmax <= 0:
            continue
        c = 0.5 * cmax
        lam2_safe = np.where(np.abs(lam2) > 0, lam2, 1.0)
        rb = lam1 / lam2_safe
        v = np.exp(-(rb * rb) / (2.0 * BETA * BETA)) * (1.0 - np.exp(-(structness * structness) / (2.0 * c * c)))
        v = np.where(lam2 > 0, v, 0.0)  # dark ridge: positive curvature across

        # eigenvector of lam1: (hxy, lam1 - hxx), axis-aligned fallback when hxy ~ 0
        vx = np.where(np.abs(hxy) > 1e-12, hxy, np.where(np.abs(hxx - lam1) <= np.abs(hyy - lam1), 1.0, 0.0))
        vy = np.where(np.abs(hxy) > 1e-12, lam1 - hxx, np.where(np.abs(hxx - lam1) <= np.abs(hyy - lam1), 0.0, 1.0))
        theta = np.mod(np.arctan2(vy, vx), np.pi)

        win = v > best
        best = np.where(win, v, best)
        best_theta = np.where(win, theta, best_theta)
        best_scale = np.where(win, s, best_scale)

    peak = best.max()
    if peak > 0:
        best = best / peak
    return RidgeResponse(response=best, orientation=best_theta, best_scale=best_scale)


def otsu_threshold(values: np.ndarray, bins: int = 256) -> float:
    """Otsu's between-class-variance threshold of a value sample."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        return 0.0
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        return lo
    hist, edges = np.histogram(v, bins=bins, range=(lo, hi))
    hist = hist.astype(np.float64)
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * centers)
    mt = m0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m0 / w0
        mu1 = (mt - m0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between[~np.isfinite(between)] = -1.0
    # the criterion is flat across an empty valley; take the plateau middle
    best = np.nonzero(between >= between.max() - 1e-12)[0]
    return float(centers[int(best[len(best) // 2])])


def _neighbor_count(mask: np.ndarray) -> np.ndarray:
    k = np.ones((3, 3), dtype=np.int64)
    k[1, 1] = 0
    return ndimage.convolve(mask.astype(np.int64), k, mode="constant", cval=0)


_NB8 = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


def _dissolve_clutter(m: np.ndarray) -> np.ndarray:
    """Remove redundant high-degree pixels whose neighbors stay mutually
    8-connected without them.

    Thinning can leave small thick knots at chain tips and joints; their
    extra pixels read as fake bifurcations and hide true endpoints.  A true
    bifurcation pixel is never removed because its arms would disconnect.
    """
    h, w = m.shape
    changed = True
    while changed:
        changed = False
        nb = _neighbor_count(m)
        for y, x in np.argwhere(m & (nb >= 3)):
            if not m[y, x]:
                continue
            pts = [(x + dx, y + dy) for dx, dy in _NB8
                   if 0 <= x + dx < w and 0 <= y + dy < h and m[y + dy, x + dx]]
            if len(pts) < 3:
                continue
            seen = {pts[0]}
            stack = [pts[0]]
            while stack:
                ax, ay = stack.pop()
                for bx, by in pts:
                    if (bx, by) not in seen and max(abs(ax - bx), abs(ay - by)) <= 1:
                        seen.add((bx, by))
                        stack.append((bx, by))
            if len(seen) == len(pts):
                m[y, x] = False
                changed = True
    return m


def tidy_skeleton(mask: np.ndarray) -> np.ndarray:
    """Thin to one pixel width and dissolve residual thick knots."""
    return _dissolve_clutter(_kernels.thin(np.asarray(mask, dtype=bool)))


def prune_skeleton(skeleton: np.ndarray, min_len: int = MIN_SPUR) -> np.ndarray:
    """Remove spur leaves and isolated specks shorter than ``min_len`` px.

    Junction-free chains are deleted when they are shorter than ``min_len``
    and either hang off at most one bifurcation (leaf spurs) or touch none
    at all (specks); chains connecting two bifurcations are kept whatever
    their length.  Repeats until stable, so cascading spurs disappear.
    """
    sk = np.asarray(skeleton, dtype=bool).copy()
    eight = np.ones((3, 3), dtype=bool)
    while True:
        nb = _neighbor_count(sk)
        jmask = sk & (nb >= 3)
        rem = sk & ~jmask
        labels, n = ndimage.label(rem, structure=eight)
        if n == 0:
            return sk
        sizes = np.bincount(labels.ravel())
        grown_j = ndimage.binary_dilation(jmask, structure=eight)
        jlabels, _ = ndimage.label(grown_j, structure=eight)
        changed = False
        for lab in range(1, n + 1):
            if sizes[lab] >= min_len:
                continue
            comp = labels == lab
            # bifurcation clusters this chain touches
            touching = np.unique(jlabels[ndimage.binary_dilation(comp, structure=eight) & grown_j])
            touching = touching[touching > 0]
            if len(touching) <= 1:
                sk &= ~comp
                changed = True
        if changed:
            # pruned spurs can leave their attachment pixel as a fake knot
            sk = _dissolve_clutter(sk)
        else:
            return sk


def extract_centerline(resp: RidgeResponse, range_mask: np.ndarray, threshold: float | None = None,
                       min_spur: int = MIN_SPUR, seg_mask: np.ndarray | None = None) -> np.ndarray:
    """One-pixel-wide skeleton of in-range ridge maxima.

    Keeps pixels that lie in ``range_mask``, reach ``threshold`` (Otsu over
    in-range nonzero responses floored at 0.05 when not given) and are a
    strict maximum of the response along the direction perpendicular to
    their orientation (bilinear samples at +-1 px), then thins the result
    and prunes spurs below ``min_spur`` px.  A precomputed segmentation
    ``seg_mask`` (for example from an external vessel segmenter) restricts
    the range further when given.  An empty skeleton is a legal outcome
    meaning no vessel in range.
    """
    r = resp.response
    mask = np.asarray(range_mask, dtype=bool)
    if seg_mask is not None:
        seg = np.asarray(seg_mask, dtype=bool)
        if seg.shape != mask.shape:
            raise ValueError(f"segmentation mask {seg.shape} and range mask {mask.shape} dimensions differ")
        mask = mask & seg
    if r.shape != mask.shape:
        raise ValueError(f"response {r.shape} and range mask {mask.shape} dimensions differ")
    if threshold is None:
        sample = r[mask & (r > 0)]
        threshold = max(otsu_threshold(sample), THRESHOLD_FLOOR) if sample.size else THRESHOLD_FLOOR

    h, w = r.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    ux = -np.sin(resp.orientation)
    uy = np.cos(resp.orientation)
    fwd = ndimage.map_coordinates(r, [yy + uy, xx + ux], order=1, mode="nearest")
    bwd = ndimage.map_coordinates(r, [yy - uy, xx - ux], order=1, mode="nearest")
    keep = mask & (r >= threshold) & (r > fwd) & (r > bwd)
    if not keep.any():
        return keep

    # thin inside the occupied bounding box only
    ys, xs = np.nonzero(keep)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    out = np.zeros_like(keep)
    out[y0:y1, x0:x1] = tidy_skeleton(keep[y0:y1, x0:x1])
    if min_spur > 0:
        out[y0:y1, x0:x1] = prune_skeleton(out[y0:y1, x0:x1], min_spur)
    return out
