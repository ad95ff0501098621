"""Tolerance-based precision/sensitivity/F1 and sequence aggregation.

Predicted and ground-truth annotations are rasterized to 1 px point spacing
and matched by distance-threshold coverage: a predicted point within the
tolerance ``rho`` of any ground-truth point is a true positive, a
ground-truth point with no predicted point within ``rho`` is a false
negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import VesselAnnotation, resample_polyline

__all__ = ["MatchCounts", "MetricTriple", "match_counts", "metrics", "aggregate", "SequenceReport"]


@dataclass(frozen=True)
class MatchCounts:
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class MetricTriple:
    prec: float
    sens: float
    f1: float


def _point_cloud(ann: VesselAnnotation) -> np.ndarray:
    return np.vstack([resample_polyline(b, 1.0) for b in ann.branches])


def match_counts(pred: VesselAnnotation | None, gt: VesselAnnotation | None, rho: float) -> MatchCounts:
    """Count tolerance matches between two annotations of the same frame."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    pred_pts = _point_cloud(pred) if pred is not None else np.zeros((0, 2))
    gt_pts = _point_cloud(gt) if gt is not None else np.zeros((0, 2))
    if len(pred_pts) == 0:
        return MatchCounts(tp=0, fp=0, fn=len(gt_pts))
    if len(gt_pts) == 0:
        return MatchCounts(tp=0, fp=len(pred_pts), fn=0)
    gt_tree = cKDTree(gt_pts)
    d_pred, _ = gt_tree.query(pred_pts)
    tp = int((d_pred <= rho).sum())
    fp = len(pred_pts) - tp
    pred_tree = cKDTree(pred_pts)
    d_gt, _ = pred_tree.query(gt_pts)
    fn = int((d_gt > rho).sum())
    return MatchCounts(tp=tp, fp=fp, fn=fn)


def metrics(c: MatchCounts) -> MetricTriple:
    """Precision, sensitivity and F1 from match counts; zero-denominator
    cases yield 0."""
    prec = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else 0.0
    sens = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else 0.0
    f1 = 2.0 * prec * sens / (prec + sens) if (prec + sens) > 0 else 0.0
    return MetricTriple(prec=prec, sens=sens, f1=f1)


@dataclass(frozen=True)
class SequenceReport:
    """Aggregate over one or more sequences of per-frame metric triples."""

    mean: MetricTriple
    std: MetricTriple
    first_f1: float
    middle_f1: float
    last_f1: float
    n_frames: int

    def summary_lines(self) -> list[str]:
        return [
            f"mean,{self.mean.prec:.4f},{self.mean.sens:.4f},{self.mean.f1:.4f}",
            f"std,{self.std.prec:.4f},{self.std.sens:.4f},{self.std.f1:.4f}",
            f"first_middle_last_f1,{self.first_f1:.4f},{self.middle_f1:.4f},{self.last_f1:.4f}",
        ]


def aggregate(sequences: list[list[MetricTriple]]) -> SequenceReport:
    """Overall mean and population STD per metric, plus the mean F1 of each
    sequence's first, middle and last tracked frames.

    ``sequences`` holds one list of per-tracked-frame triples per sequence;
    the middle frame is index ``(T - 1) // 2`` of the tracked frames.
    """
    if not sequences or any(not s for s in sequences):
        raise ValueError("need at least one non-empty sequence")
    flat = [t for s in sequences for t in s]
    arr = np.array([[t.prec, t.sens, t.f1] for t in flat])
    mean = arr.mean(axis=0)
    std = arr.std(axis=0)  # population STD
    firsts = [s[0].f1 for s in sequences]
    middles = [s[(len(s) - 1) // 2].f1 for s in sequences]
    lasts = [s[-1].f1 for s in sequences]
    return SequenceReport(
        mean=MetricTriple(*mean),
        std=MetricTriple(*std),
        first_f1=float(np.mean(firsts)),
        middle_f1=float(np.mean(middles)),
        last_f1=float(np.mean(lasts)),
        n_frames=len(flat),
    )


def format_table(rows: list[tuple[str, int, MetricTriple]], report: SequenceReport) -> str:
    """CSV rows ``sequence,frame,prec,sens,f1`` followed by a summary block."""
    lines = ["sequence,frame,prec,sens,f1"]
    for seq, frame, t in rows:
        lines.append(f"{seq},{frame},{t.prec:.4f},{t.sens:.4f},{t.f1:.4f}")
    lines.append("summary,,,,")
    lines.extend(report.summary_lines())
    return "\n".join(lines) + "\n"
