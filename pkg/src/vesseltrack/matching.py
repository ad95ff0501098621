"""Branch matching: descriptor cost matrices and minimum-warping-distance
selection among candidate paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DaisyParams, Polyline, resample_polyline
from .daisy import DaisyExtractor
from .dtw import dtw
from .graph import CandidatePath

__all__ = ["SelectionResult", "cost_matrix", "descriptor_distances", "select_branch"]


@dataclass(frozen=True)
class SelectionResult:
    best: Polyline
    distance: float
    distances: tuple[float, ...]
    best_index: int


def descriptor_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between descriptor rows, exact zeros for
    identical rows (computed from differences, chunked over the first axis)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty((len(a), len(b)))
    for i in range(len(a)):
        out[i] = np.sqrt(((b - a[i]) ** 2).sum(axis=1))
    return out


def cost_matrix(key: np.ndarray, cur: np.ndarray, guided: Polyline, cand: Polyline,
                params: DaisyParams = DaisyParams(), *,
                key_extractor: DaisyExtractor | None = None,
                cur_extractor: DaisyExtractor | None = None,
                guided_descriptors: np.ndarray | None = None) -> np.ndarray:
    """(M, L) matrix of descriptor distances between guided points on the
    key frame and candidate points on the current frame.

    Extractors and guided descriptors may be passed in to reuse per-frame
    and per-branch work across candidates.
    """
    if guided_descriptors is None:
        if key_extractor is None:
            key_extractor = DaisyExtractor(key, params)
        guided_descriptors = key_extractor.describe(guided)
    if cur_extractor is None:
        cur_extractor = DaisyExtractor(cur, params)
    return descriptor_distances(guided_descriptors, cur_extractor.describe(cand))


def select_branch(key: np.ndarray, cur: np.ndarray, guided: Polyline,
                  candidates: list[CandidatePath] | list[Polyline],
                  params: DaisyParams = DaisyParams(), *,
                  spacing: float = 1.0,
                  key_extractor: DaisyExtractor | None = None,
                  cur_extractor: DaisyExtractor | None = None) -> SelectionResult:
    """Score every candidate with DTW over descriptor costs and return the
    one with the smallest warping distance (first wins on ties).

    Guided and candidate polylines are resampled to ``spacing`` before
    matching; guided descriptors are computed once and shared.
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    if key_extractor is None:
        key_extractor = DaisyExtractor(key, params)
    if cur_extractor is None:
        cur_extractor = DaisyExtractor(cur, params)
    guided_rs = resample_polyline(guided, spacing)
    guided_desc = key_extractor.describe(guided_rs)

    polylines = [c.polyline if isinstance(c, CandidatePath) else c for c in candidates]
    distances = []
    for poly in polylines:
        cand_rs = resample_polyline(poly, spacing)
        d = descriptor_distances(guided_desc, cur_extractor.describe(cand_rs))
        distances.append(dtw(d).distance)
    best_index = int(np.argmin(distances))
    return SelectionResult(
        best=polylines[best_index],
        distance=float(distances[best_index]),
        distances=tuple(float(x) for x in distances),
        best_index=best_index,
    )
