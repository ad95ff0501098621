"""Centerline graph construction and greedy candidate-path enumeration.

The skeleton splits at bifurcation pixels into junction-free segments.  The
graph stores two complementary views:

* an adjacency matrix over the ``2 * S`` segment-end entities, where entry
  pairs are connected either as the two ends of one segment or as ends of
  different segments snapped to the same node, and
* a node-level view (junction clusters plus promoted free ends) used for
  simple-path search.

Candidate branch paths are all simple node paths between candidate start
and end nodes, found by depth-first search and truncated at a configurable
cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import Polyline, as_polyline, densify_polyline

__all__ = [
    "CenterlineGraph",
    "CandidatePath",
    "detect_junctions",
    "split_segments",
    "build_graph",
    "candidate_endpoints",
    "enumerate_paths",
]

SNAP_RADIUS = 3.0
_EIGHT = np.ones((3, 3), dtype=bool)
_NB = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


@dataclass(frozen=True)
class CandidatePath:
    """A simple node path and its stitched polyline (start to end)."""

    nodes: tuple[int, ...]
    polyline: Polyline


@dataclass
class CenterlineGraph:
    segments: list[Polyline]
    nodes: np.ndarray            # (K, 2) float (x, y) node coordinates
    junction_ids: np.ndarray     # node ids that came from junction clusters
    segment_nodes: np.ndarray    # (S, 2) int node ids at segment start/end
    adjacency: np.ndarray        # (2S, 2S) bool over segment-end entities

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def node_neighbors(self) -> dict[int, list[tuple[int, int]]]:
        """Node-level view: node id -> sorted (neighbor node, segment id).

        Parallel segments collapse to the lowest segment id; self loops are
        dropped (they can never appear on a simple path).
        """
        chosen: dict[tuple[int, int], int] = {}
        for s, (a, b) in enumerate(self.segment_nodes):
            a, b = int(a), int(b)
            if a == b:
                continue
            k = (min(a, b), max(a, b))
            if k not in chosen:
                chosen[k] = s
        nbr: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(self.nodes))}
        for (a, b), s in chosen.items():
            nbr[a].append((b, s))
            nbr[b].append((a, s))
        for lst in nbr.values():
            lst.sort()
        return nbr


def _junction_pixel_mask(skeleton: np.ndarray) -> np.ndarray:
    k = np.ones((3, 3), dtype=np.int64)
    k[1, 1] = 0
    nb = ndimage.convolve(skeleton.astype(np.int64), k, mode="constant", cval=0)
    return skeleton & (nb >= 3)


def detect_junctions(skeleton: np.ndarray) -> np.ndarray:
    """(J, 2) float (x, y) junction points.

    Skeleton pixels with at least three 8-neighbors are clustered (pixels
    within Chebyshev distance 2 merge transitively) and each cluster is
    reduced to the centroid of its member pixels.
    """
    skeleton = np.asarray(skeleton, dtype=bool)
    jmask = _junction_pixel_mask(skeleton)
    if not jmask.any():
        return np.zeros((0, 2), dtype=np.float64)
    grown = ndimage.binary_dilation(jmask, structure=_EIGHT)
    labels, n = ndimage.label(grown, structure=_EIGHT)
    out = []
    for lab in range(1, n + 1):
        ys, xs = np.nonzero(jmask & (labels == lab))
        if len(ys):
            out.append((xs.mean(), ys.mean()))
    return np.asarray(out, dtype=np.float64)


def split_segments(skeleton: np.ndarray, junctions=None) -> list[Polyline]:
    """Trace maximal junction-free 8-connected pixel chains into ordered
    polylines.

    Chain ends adjacent to a bifurcation pixel are extended into it so
    segments meet at junctions; isolated single pixels are discarded.
    """
    skeleton = np.asarray(skeleton, dtype=bool)
    jmask = _junction_pixel_mask(skeleton)
    rem = skeleton & ~jmask
    labels, n = ndimage.label(rem, structure=_EIGHT)
    h, w = skeleton.shape
    segments: list[Polyline] = []
    for lab in range(1, n + 1):
        ys, xs = np.nonzero(labels == lab)
        pix = set(zip(xs.tolist(), ys.tolist()))

        def nbrs(p, pool):
            x, y = p
            return [(x + dx, y + dy) for dx, dy in _NB if (x + dx, y + dy) in pool]

        ends = sorted(p for p in pix if len(nbrs(p, pix)) <= 1)
        start = min(((y, x) for x, y in ends), default=None)
        if start is None:  # cycle component, open it at the lexicographic min
            start = min((y, x) for x, y in pix)
        sy, sx = start
        chain = [(sx, sy)]
        visited = {(sx, sy)}
        while True:
            nxt = sorted((y, x) for x, y in nbrs(chain[-1], pix) if (x, y) not in visited)
            if not nxt:
                break
            y, x = nxt[0]
            chain.append((x, y))
            visited.add((x, y))

        # pull each end into its adjacent bifurcation pixel, if any; a
        # single-pixel chain may claim two distinct ones (one per side)
        claimed: set[tuple[int, int]] = set()
        for where in (0, -1):
            x, y = chain[where]
            adj = sorted(
                (y + dy, x + dx)
                for dx, dy in _NB
                if 0 <= x + dx < w and 0 <= y + dy < h
                and jmask[y + dy, x + dx] and (y + dy, x + dx) not in claimed
            )
            if adj:
                jy, jx = adj[0]
                claimed.add((jy, jx))
                if where == 0:
                    chain.insert(0, (jx, jy))
                else:
                    chain.append((jx, jy))
        if len(chain) < 2:
            continue
        segments.append(as_polyline(np.asarray(chain, dtype=np.float64)))
    return segments


def build_graph(segments: list[Polyline], junctions, snap_radius: float = SNAP_RADIUS) -> CenterlineGraph:
    """Assemble the graph: snap segment ends to junction nodes (or promote
    unmatched ends to fresh nodes) and fill the end-entity adjacency."""
    junctions = np.asarray(junctions, dtype=np.float64).reshape(-1, 2)
    s_count = len(segments)
    # entity 2s is the start of segment s, entity 2s+1 its end
    ends = np.empty((2 * s_count, 2), dtype=np.float64)
    for s, seg in enumerate(segments):
        ends[2 * s] = seg[0]
        ends[2 * s + 1] = seg[-1]

    node_coords: list[np.ndarray] = [junctions[j] for j in range(len(junctions))]
    junction_ids = np.arange(len(junctions))
    end_node = np.full(2 * s_count, -1, dtype=np.int64)
    for e in range(2 * s_count):
        if len(junctions):
            d = np.hypot(*(junctions - ends[e]).T)
            j = int(np.argmin(d))
            if d[j] <= snap_radius:
                end_node[e] = j

    # cluster unmatched ends among themselves (union-find by proximity)
    free = np.nonzero(end_node < 0)[0]
    root = {int(e): int(e) for e in free}

    def find(e):
        while root[e] != e:
            root[e] = root[root[e]]
            e = root[e]
        return e

    for i_, a in enumerate(free):
        for b in free[i_ + 1:]:
            if np.hypot(*(ends[a] - ends[b])) <= snap_radius:
                root[find(int(a))] = find(int(b))
    clusters: dict[int, list[int]] = {}
    for e in free:
        clusters.setdefault(find(int(e)), []).append(int(e))
    for members in sorted(clusters.values(), key=min):
        nid = len(node_coords)
        node_coords.append(ends[members].mean(axis=0))
        for e in members:
            end_node[e] = nid

    adjacency = np.zeros((2 * s_count, 2 * s_count), dtype=bool)
    for s in range(s_count):
        adjacency[2 * s, 2 * s + 1] = adjacency[2 * s + 1, 2 * s] = True
    for a in range(2 * s_count):
        for b in range(a + 1, 2 * s_count):
            if a // 2 != b // 2 and end_node[a] == end_node[b]:
                adjacency[a, b] = adjacency[b, a] = True

    nodes = np.asarray(node_coords, dtype=np.float64).reshape(-1, 2)
    return CenterlineGraph(
        segments=list(segments),
        nodes=nodes,
        junction_ids=junction_ids,
        segment_nodes=end_node.reshape(s_count, 2),
        adjacency=adjacency,
    )


def candidate_endpoints(graph: CenterlineGraph, guided_endpoint, n: int) -> list[int]:
    """Node ids of the ends of the ``n`` segments nearest to the guided
    endpoint (curve distance, ties to the lower segment index)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if graph.n_segments == 0:
        raise ValueError("graph has no segments")
    p = np.asarray(guided_endpoint, dtype=np.float64)
    dists = np.array([np.hypot(*(seg - p).T).min() for seg in graph.segments])
    order = np.argsort(dists, kind="stable")[: min(n, graph.n_segments)]
    out: list[int] = []
    for s in order:
        for nid in graph.segment_nodes[s]:
            if int(nid) not in out:
                out.append(int(nid))
    return out


def enumerate_paths(graph: CenterlineGraph, starts, ends, max_paths: int = 512
                    ) -> tuple[list[CandidatePath], bool]:
    """All simple node paths from any start node to any end node (DFS).

    Returns the paths (each with a stitched, gap-free polyline oriented
    start to end) and a flag telling whether enumeration was truncated at
    ``max_paths``.
    """
    if max_paths < 1:
        raise ValueError("max_paths must be >= 1")
    starts = [int(s) for s in starts]
    ends_set = {int(e) for e in ends}
    if not starts or not ends_set:
        raise ValueError("starts and ends must be non-empty")
    nbr = graph.node_neighbors()
    sequences: list[tuple[int, ...]] = []
    truncated = False

    def dfs(node: int, path: list[int], on_path: set[int]) -> bool:
        for nxt, _seg in nbr.get(node, ()):
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            if nxt in ends_set:
                sequences.append(tuple(path))
                if len(sequences) >= max_paths:
                    path.pop()
                    on_path.discard(nxt)
                    return True
            if dfs(nxt, path, on_path):
                path.pop()
                on_path.discard(nxt)
                return True
            path.pop()
            on_path.discard(nxt)
        return False

    for s in dict.fromkeys(starts):
        if truncated:
            break
        truncated = dfs(s, [s], {s})

    seg_for: dict[tuple[int, int], int] = {}
    for s, (a, b) in enumerate(graph.segment_nodes):
        a, b = int(a), int(b)
        if a == b:
            continue
        k = (min(a, b), max(a, b))
        seg_for.setdefault(k, s)

    paths = []
    for seq in sequences:
        pts: list[np.ndarray] = []
        for a, b in zip(seq[:-1], seq[1:]):
            s = seg_for[(min(a, b), max(a, b))]
            seg = graph.segments[s]
            sa, sb = (int(v) for v in graph.segment_nodes[s])
            piece = seg if (sa, sb) == (a, b) else seg[::-1]
            if pts and np.allclose(pts[-1][-1], piece[0]):
                piece = piece[1:]
            pts.append(piece)
        poly = densify_polyline(as_polyline(np.vstack(pts)))
        paths.append(CandidatePath(nodes=seq, polyline=poly))
    return paths, truncated
