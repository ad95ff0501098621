"""Dynamic time warping over a precomputed point-pair cost matrix.

The warping path is anchored at both corners, moves monotonically with unit
steps, and the reported distance is the plain sum of matched-pair costs
(no length normalization).  Backtracking prefers diagonal over up over left
among equal-cost predecessors, which yields the shortest of the tied paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = ["DtwResult", "dtw", "is_valid_warping_path"]


@dataclass(frozen=True)
class DtwResult:
    """Minimal accumulated cost and the (K, 2) index path achieving it."""

    distance: float
    path: np.ndarray

    def __post_init__(self):
        self.path.setflags(write=False)


def dtw(d: np.ndarray) -> DtwResult:
    """Solve the warping problem for an (M, L) nonnegative cost matrix.

    Returns the accumulated cost of the optimal path from (0, 0) to
    (M-1, L-1) and the path itself as 0-indexed (i, j) rows.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
        raise ValueError(f"cost matrix must be 2D and non-empty, got shape {d.shape}")
    acc = _kernels.dtw_accumulate(d)
    m, l = d.shape
    i, j = m - 1, l - 1
    rev = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            options = (acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
            pick = int(np.argmin(options))  # ties resolve diagonal, then up, then left
            if pick == 0:
                i, j = i - 1, j - 1
            elif pick == 1:
                i -= 1
            else:
                j -= 1
        rev.append((i, j))
    path = np.array(rev[::-1], dtype=np.int64)
    return DtwResult(distance=float(acc[m - 1, l - 1]), path=path)


def is_valid_warping_path(path: np.ndarray, m: int, l: int) -> bool:
    """Check boundary anchoring, unit-step continuity and monotonicity."""
    path = np.asarray(path)
    if path.ndim != 2 or path.shape[1] != 2 or len(path) == 0:
        return False
    if tuple(path[0]) != (0, 0) or tuple(path[-1]) != (m - 1, l - 1):
        return False
    steps = path[1:] - path[:-1]
    if len(steps) and (steps.min() < 0 or steps.max() > 1):
        return False
    if len(steps) and not np.all(steps.sum(axis=1) >= 1):
        return False
    return max(m, l) <= len(path) <= m + l
