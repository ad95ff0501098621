"""Per-branch tracking across a sequence with key-frame update, plus branch
fusion into a connected vasculature.

Each tracked frame becomes the key for the next one.  Branches are tracked
independently (sharing per-frame registration, ridge and descriptor
precomputations, which does not change results) and then fused for output;
the un-fused selections seed the next frame so fusion never feeds back into
the search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (Polyline, TrackerConfig, VesselAnnotation, as_polyline,
                   rasterize_polyline, resample_polyline)
from .daisy import DaisyExtractor
from .gaps import bridge_gaps, connection_cost, dijkstra_path, _bridge_window
from .graph import build_graph, candidate_endpoints, detect_junctions, enumerate_paths, split_segments
from .matching import select_branch
from .register import DeformationField, map_annotation, register, tracking_range
from .ridge import RidgeResponse, extract_centerline, vesselness

__all__ = ["BranchResult", "TrackingReport", "FrameContext", "track_branch",
           "fuse_branches", "track_sequence", "sweep_candidate_segments"]


@dataclass(frozen=True)
class BranchResult:
    polyline: Polyline
    distance: float | None      # warping distance, None on fallback
    fallback: bool
    truncated: bool = False


@dataclass
class FrameContext:
    """Shared per-frame-pair precomputation reused by every branch."""

    key: np.ndarray
    cur: np.ndarray
    cfg: TrackerConfig
    field: DeformationField = None
    ridge: RidgeResponse = None
    key_extractor: DaisyExtractor = None
    cur_extractor: DaisyExtractor = None
    seg_mask: np.ndarray | None = None  # optional external segmentation of cur

    def __post_init__(self):
        if self.field is None:
            self.field = register(self.key, self.cur, self.cfg.max_displacement)
        if self.ridge is None:
            self.ridge = vesselness(self.cur, self.cfg.scales)
        if self.key_extractor is None:
            self.key_extractor = DaisyExtractor(self.key, self.cfg.daisy)
        if self.cur_extractor is None:
            self.cur_extractor = DaisyExtractor(self.cur, self.cfg.daisy)


def track_branch(key: np.ndarray, cur: np.ndarray, guided: Polyline,
                 cfg: TrackerConfig = TrackerConfig(), ctx: FrameContext | None = None) -> BranchResult:
    """Track one guided branch from the key frame onto the current frame.

    Runs the full pipeline (register, map, range, centerline, gap repair,
    graph, candidate endpoints, path enumeration, DTW selection).  When no
    centerline or no candidate path exists the registration-mapped guided
    branch is returned with the fallback flag set.
    """
    if ctx is None:
        ctx = FrameContext(np.asarray(key, dtype=np.float64), np.asarray(cur, dtype=np.float64), cfg)
    guided = as_polyline(guided)
    mapped = map_annotation(VesselAnnotation([guided]), ctx.field).branches[0]

    range_mask = tracking_range(mapped, cfg.sigma, ctx.cur.shape)
    skeleton = extract_centerline(ctx.ridge, range_mask, cfg.nms_threshold, seg_mask=ctx.seg_mask)
    if not skeleton.any():
        return BranchResult(polyline=mapped, distance=None, fallback=True)
    costs = connection_cost(ctx.ridge, skeleton, cfg.gap_weights)
    skeleton = bridge_gaps(skeleton, costs, cfg.max_gap, cfg.gap_cost_ceiling)

    junctions = detect_junctions(skeleton)
    segments = split_segments(skeleton, junctions)
    if not segments:
        return BranchResult(polyline=mapped, distance=None, fallback=True)
    graph = build_graph(segments, junctions, cfg.snap_radius)
    starts = candidate_endpoints(graph, mapped[0], cfg.n_nearest)
    ends = candidate_endpoints(graph, mapped[-1], cfg.n_nearest)
    paths, truncated = enumerate_paths(graph, starts, ends, cfg.max_paths)
    if not paths:
        return BranchResult(polyline=mapped, distance=None, fallback=True, truncated=truncated)

    sel = select_branch(ctx.key, ctx.cur, guided, paths, cfg.daisy,
                        spacing=cfg.resample_spacing,
                        key_extractor=ctx.key_extractor, cur_extractor=ctx.cur_extractor)
    return BranchResult(polyline=sel.best, distance=sel.distance, fallback=False, truncated=truncated)


def fuse_branches(branches: list[Polyline], resp: RidgeResponse,
                  cfg: TrackerConfig = TrackerConfig()) -> VesselAnnotation:
    """Join tracked branches into a topologically connected vasculature.

    Endpoints of different branches within the snap radius merge to their
    centroid; an endpoint within ``max_gap`` of another branch's interior is
    extended toward it with a low-cost Dijkstra bridge on the frame's
    connection-cost map.  Branch identities and order are preserved and the
    operation is idempotent.
    """
    work = [b.copy() for b in branches]
    n = len(work)

    # endpoint-to-endpoint snapping, nearest pairs first, one merge per endpoint
    refs = [(i, w) for i in range(n) for w in (0, -1)]
    cand = []
    for a in range(len(refs)):
        for b in range(a + 1, len(refs)):
            ia, wa = refs[a]
            ib, wb = refs[b]
            if ia == ib:
                continue
            d = float(np.hypot(*(work[ia][wa] - work[ib][wb])))
            if d <= cfg.snap_radius:
                cand.append((d, a, b))
    cand.sort()
    merged: set[int] = set()
    for d, a, b in cand:
        if a in merged or b in merged:
            continue
        ia, wa = refs[a]
        ib, wb = refs[b]
        centroid = 0.5 * (work[ia][wa] + work[ib][wb])
        work[ia][wa] = centroid
        work[ib][wb] = centroid
        merged.update((a, b))

    # endpoint-to-interior bridging on the frame cost map
    raster = np.zeros(resp.shape, dtype=bool)
    for b in work:
        raster |= rasterize_polyline(b, resp.shape)
    costs = connection_cost(resp, raster, cfg.gap_weights)
    h, w = resp.shape
    dense = [resample_polyline(b, 1.0) for b in work]
    for r, (i, where) in enumerate(refs):
        if r in merged:
            continue
        e = work[i][where]
        best = None
        for j in range(n):
            if j == i or len(dense[j]) < 5:
                continue
            interior = dense[j][2:-2]
            dists = np.hypot(*(interior - e).T)
            k = int(np.argmin(dists))
            if best is None or dists[k] < best[0]:
                best = (float(dists[k]), interior[k])
        if best is None or not (1.5 < best[0] <= cfg.max_gap):
            continue
        a_px = (int(round(np.clip(e[0], 0, w - 1))), int(round(np.clip(e[1], 0, h - 1))))
        t_px = (int(round(np.clip(best[1][0], 0, w - 1))), int(round(np.clip(best[1][1], 0, h - 1))))
        if a_px == t_px:
            continue
        allowed = _bridge_window(a_px, t_px, cfg.max_gap, resp.shape)
        hit = dijkstra_path(costs.cost, a_px, t_px, allowed)
        if hit is None:
            continue
        path, total, length = hit
        if total / length > cfg.gap_cost_ceiling:
            continue
        add = np.asarray(path[1:], dtype=np.float64)
        if len(add) == 0:
            continue
        if where == -1:
            work[i] = np.vstack([work[i], add])
        else:
            work[i] = np.vstack([add[::-1], work[i]])

    return VesselAnnotation([as_polyline(b) for b in work])


@dataclass
class TrackingReport:
    """Per-frame results of a sequence run."""

    annotations: list[VesselAnnotation] = field(default_factory=list)   # emitted (fused)
    selections: list[VesselAnnotation] = field(default_factory=list)    # raw per-branch picks
    distances: list[list[float | None]] = field(default_factory=list)
    fallbacks: list[list[bool]] = field(default_factory=list)
    timings: list[float] = field(default_factory=list)

    @property
    def n_fallbacks(self) -> int:
        return sum(sum(f) for f in self.fallbacks)

    def to_text(self) -> str:
        lines = ["frame,branch,warping_distance,fallback,seconds"]
        for ann, dists, fbs, dt in zip(self.annotations, self.distances, self.fallbacks, self.timings):
            for b, (d, fb) in enumerate(zip(dists, fbs)):
                dval = "" if d is None else f"{d:.4f}"
                lines.append(f"{ann.frame_index},{b},{dval},{int(fb)},{dt:.3f}")
        lines.append(f"total_fallbacks,{self.n_fallbacks}")
        return "\n".join(lines) + "\n"


def track_sequence(frames: list[np.ndarray], initial: VesselAnnotation,
                   cfg: TrackerConfig = TrackerConfig(),
                   fields: list[DeformationField] | None = None,
                   frame_indices: list[int] | None = None,
                   seg_masks: list[np.ndarray] | None = None) -> TrackingReport:
    """Track every branch of ``initial`` through consecutive frame pairs.

    ``fields`` optionally supplies precomputed deformation fields (one per
    pair) in place of the built-in registration; ``seg_masks`` optionally
    restricts each current frame to an external vessel segmentation.
    ``frame_indices`` names the emitted frames (defaults to 1..T-1).
    Per-branch fallbacks are recorded, never fatal.
    """
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    if fields is not None and len(fields) != len(frames) - 1:
        raise ValueError("need exactly one deformation field per frame pair")
    if seg_masks is not None and len(seg_masks) != len(frames) - 1:
        raise ValueError("need exactly one segmentation mask per tracked frame")
    if frame_indices is None:
        frame_indices = list(range(1, len(frames)))
    report = TrackingReport()
    key_ann = initial
    for t in range(len(frames) - 1):
        t0 = time.perf_counter()
        ctx = FrameContext(np.asarray(frames[t], dtype=np.float64),
                           np.asarray(frames[t + 1], dtype=np.float64), cfg,
                           field=None if fields is None else fields[t],
                           seg_mask=None if seg_masks is None else seg_masks[t])
        results = [track_branch(ctx.key, ctx.cur, b, cfg, ctx) for b in key_ann.branches]
        picks = [r.polyline for r in results]
        selections = VesselAnnotation(picks, frame_indices[t])
        emitted = fuse_branches(picks, ctx.ridge, cfg).with_frame(frame_indices[t]) if cfg.fusion else selections
        report.selections.append(selections)
        report.annotations.append(emitted)
        report.distances.append([r.distance for r in results])
        report.fallbacks.append([r.fallback for r in results])
        report.timings.append(time.perf_counter() - t0)
        key_ann = selections  # fusion output never feeds back into tracking
    return report


def sweep_candidate_segments(frames: list[np.ndarray], initial: VesselAnnotation,
                             truths: list[VesselAnnotation], cfg: TrackerConfig,
                             values=(1, 2, 3), rho: float | None = None):
    """Re-run the tracker for several candidate-segment counts ``n`` and
    evaluate each run, producing rows for a small comparison table."""
    from .metrics import aggregate, match_counts, metrics

    rho = cfg.rho if rho is None else rho
    rows = []
    for n in values:
        rep = track_sequence(frames, initial, cfg.updated(n_nearest=int(n)))
        triples = [metrics(match_counts(ann, gt, rho))
                   for ann, gt in zip(rep.annotations, truths[1:])]
        agg = aggregate([triples])
        rows.append((int(n), agg.mean))
    return rows


def format_sweep_table(rows) -> str:
    lines = ["n,prec,sens,f1"]
    for n, triple in rows:
        lines.append(f"{n},{triple.prec:.4f},{triple.sens:.4f},{triple.f1:.4f}")
    return "\n".join(lines) + "\n"
