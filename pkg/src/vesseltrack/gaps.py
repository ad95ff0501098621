"""Skeleton gap repair: a connection-cost map fused from skeleton saliency,
ridge response and orientation coherence, plus Dijkstra bridging between
nearby endpoints of different components.

Also reused by branch fusion, which bridges tracked branches on the same
cost map.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .ridge import RidgeResponse, tidy_skeleton

__all__ = ["ConnectionCostMap", "connection_cost", "bridge_gaps", "dijkstra_path", "skeleton_endpoints"]

PROB_FLOOR = 1e-6
DEFAULT_WEIGHTS = (0.4, 0.4, 0.2)
DEFAULT_CEILING = -math.log(0.2)
ENDPOINT_COHERENCE_RADIUS = 10.0
SALIENCY_STD = 2.0

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass
class ConnectionCostMap:
    """Per-pixel traversal cost, ``cost = -log p`` for a connection
    probability ``p`` floored at 1e-6."""

    cost: np.ndarray

    @property
    def shape(self):
        return self.cost.shape

    @classmethod
    def from_probability(cls, p: np.ndarray) -> "ConnectionCostMap":
        return cls(cost=-np.log(np.clip(p, PROB_FLOOR, 1.0)))


def _neighbor_count(mask: np.ndarray) -> np.ndarray:
    k = np.ones((3, 3), dtype=np.int64)
    k[1, 1] = 0
    return ndimage.convolve(mask.astype(np.int64), k, mode="constant", cval=0)


def skeleton_endpoints(skeleton: np.ndarray) -> np.ndarray:
    """(K, 2) array of (x, y) integer coordinates of degree-1 skeleton pixels."""
    nb = _neighbor_count(skeleton)
    ys, xs = np.nonzero(skeleton & (nb == 1))
    return np.column_stack([xs, ys]).astype(np.int64)


def connection_cost(resp: RidgeResponse, skeleton: np.ndarray,
                    weights=DEFAULT_WEIGHTS) -> ConnectionCostMap:
    """Fuse skeleton saliency, ridge response and orientation coherence into
    a probability map and return its negative-log cost.

    Saliency is the max-normalized Gaussian blur (std 2 px) of the skeleton
    indicator.  Coherence is the squared cosine between a pixel's ridge
    orientation and the orientation at the nearest skeleton endpoint within
    10 px, 0.5 where no endpoint is close.
    """
    skeleton = np.asarray(skeleton, dtype=bool)
    if resp.shape != skeleton.shape:
        raise ValueError("response and skeleton dimensions differ")
    w1, w2, w3 = weights

    sal = ndimage.gaussian_filter(skeleton.astype(np.float64), SALIENCY_STD)
    m = sal.max()
    if m > 0:
        sal = sal / m

    coher = np.full(skeleton.shape, 0.5)
    eps = skeleton_endpoints(skeleton)
    if len(eps):
        ep_mask = np.zeros(skeleton.shape, dtype=bool)
        ep_mask[eps[:, 1], eps[:, 0]] = True
        dist, (iy, ix) = ndimage.distance_transform_edt(~ep_mask, return_indices=True)
        near = dist <= ENDPOINT_COHERENCE_RADIUS
        dtheta = resp.orientation - resp.orientation[iy, ix]
        coher = np.where(near, np.cos(dtheta) ** 2, 0.5)

    p = np.clip(w1 * sal + w2 * resp.response + w3 * coher, PROB_FLOOR, 1.0)
    return ConnectionCostMap(cost=-np.log(p))


def dijkstra_path(cost: np.ndarray, start: tuple[int, int], goal: tuple[int, int],
                  allowed: np.ndarray) -> tuple[list[tuple[int, int]], float, float] | None:
    """Minimum-cost 8-connected path from ``start`` to ``goal`` (x, y).

    Step cost is the mean of the two pixel costs times the step length.
    Returns (pixels, total cost, arc length) or None when unreachable.
    """
    h, w = cost.shape
    sx, sy = start
    gx, gy = goal
    if not (allowed[sy, sx] and allowed[gy, gx]):
        return None
    dist = {(sx, sy): 0.0}
    lengths = {(sx, sy): 0.0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    heap = [(0.0, sy, sx)]
    done = set()
    steps = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    while heap:
        d, y, x = heapq.heappop(heap)
        if (x, y) in done:
            continue
        done.add((x, y))
        if (x, y) == (gx, gy):
            break
        c_here = cost[y, x]
        for ddx, ddy in steps:
            nx, ny = x + ddx, y + ddy
            if nx < 0 or ny < 0 or nx >= w or ny >= h or not allowed[ny, nx]:
                continue
            if (nx, ny) in done:
                continue
            step_len = math.sqrt(2.0) if (ddx and ddy) else 1.0
            nd = d + 0.5 * (c_here + cost[ny, nx]) * step_len
            if nd < dist.get((nx, ny), math.inf):
                dist[(nx, ny)] = nd
                lengths[(nx, ny)] = lengths[(x, y)] + step_len
                parent[(nx, ny)] = (x, y)
                heapq.heappush(heap, (nd, ny, nx))
    if (gx, gy) not in done:
        return None
    path = [(gx, gy)]
    while path[-1] != (sx, sy):
        path.append(parent[path[-1]])
    path.reverse()
    return path, dist[(gx, gy)], max(lengths[(gx, gy)], 1.0)


def _bridge_window(a, b, max_gap: float, shape) -> np.ndarray:
    """Allowed region for one bridge: bounding box of the endpoint pair
    dilated by max_gap/2, intersected with the locus of pixels within
    1.5 * max_gap of both endpoints (keeps paths from wandering)."""
    h, w = shape
    m = int(math.ceil(max_gap / 2.0))
    x0 = max(0, min(a[0], b[0]) - m)
    x1 = min(w, max(a[0], b[0]) + m + 1)
    y0 = max(0, min(a[1], b[1]) - m)
    y1 = min(h, max(a[1], b[1]) + m + 1)
    allowed = np.zeros(shape, dtype=bool)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    near_both = (np.hypot(xx - a[0], yy - a[1]) <= 1.5 * max_gap) & \
                (np.hypot(xx - b[0], yy - b[1]) <= 1.5 * max_gap)
    allowed[y0:y1, x0:x1] = near_both
    return allowed


def bridge_gaps(skeleton: np.ndarray, costs: ConnectionCostMap, max_gap: float,
                ceiling: float = DEFAULT_CEILING) -> np.ndarray:
    """Connect skeleton endpoints of different components via minimum-cost
    Dijkstra paths and re-thin.

    Endpoint pairs are processed in ascending Euclidean distance; each
    endpoint bridges at most once per pass and a bridge is kept only when
    its mean per-pixel cost stays at or below ``ceiling``.  Components only
    ever merge.
    """
    sk = np.asarray(skeleton, dtype=bool)
    if sk.shape != costs.shape:
        raise ValueError("skeleton and cost map dimensions differ")
    if max_gap < 1:
        raise ValueError("max_gap must be >= 1")
    labels, n = ndimage.label(sk, structure=_EIGHT)
    if n <= 1:
        return sk.copy()
    eps = skeleton_endpoints(sk)
    if len(eps) < 2:
        return sk.copy()

    # candidate endpoint pairs across components, nearest first
    pairs = []
    for i in range(len(eps)):
        for j in range(i + 1, len(eps)):
            a, b = eps[i], eps[j]
            la, lb = labels[a[1], a[0]], labels[b[1], b[0]]
            if la == lb:
                continue
            d = math.hypot(a[0] - b[0], a[1] - b[1])
            if d <= max_gap:
                pairs.append((d, tuple(a), tuple(b), la, lb))
    pairs.sort(key=lambda t: (t[0], t[1], t[2]))

    comp_root = list(range(n + 1))

    def find(c):
        while comp_root[c] != c:
            comp_root[c] = comp_root[comp_root[c]]
            c = comp_root[c]
        return c

    out = sk.copy()
    used: set[tuple[int, int]] = set()
    for _, a, b, la, lb in pairs:
        if a in used or b in used:
            continue
        if find(la) == find(lb):
            continue
        allowed = _bridge_window(a, b, max_gap, sk.shape)
        hit = dijkstra_path(costs.cost, a, b, allowed)
        if hit is None:
            continue
        path, total, length = hit
        if total / length > ceiling:
            continue
        for x, y in path:
            out[y, x] = True
        used.add(a)
        used.add(b)
        comp_root[find(la)] = find(lb)

    ys, xs = np.nonzero(out)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    thinned = out.copy()
    thinned[y0:y1, x0:x1] = tidy_skeleton(out[y0:y1, x0:x1])
    return thinned
