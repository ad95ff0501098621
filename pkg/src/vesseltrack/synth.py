"""Synthetic angiography-like sequences with exact ground truth.

Dark smooth tubes (Gaussian cross-section) on a bright background, deformed
by a global periodic displacement field modulated by a low-frequency
spatial pattern.  Everything is deterministic under the seed, byte for
byte, so rendered sequences double as regression fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .core import VesselAnnotation, as_polyline, resample_polyline

__all__ = ["SynthParams", "gen_tree", "deform_tree", "render_sequence", "branch_levels"]


@dataclass(frozen=True)
class SynthParams:
    seed: int = 7
    size: tuple[int, int] = (512, 512)     # (height, width)
    frames: int = 12
    frames_per_cycle: int = 12
    branches: int = 3
    depth: int = 2
    width: float = 2.0                     # tube cross-section std, px
    contrast: float = 0.5
    noise: float = 0.05
    amplitude: float = 4.0                 # peak motion, px
    background: float = 0.8
    gradient: float = 0.0                  # optional low-frequency shading

    def __post_init__(self):
        if self.frames < 1 or self.frames_per_cycle < 1:
            raise ValueError("frames and frames_per_cycle must be >= 1")
        if self.branches < 1 or self.depth < 1:
            raise ValueError("branches and depth must be >= 1")


def _spline_through(ctrl: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    t = np.concatenate([[0.0], np.cumsum(np.hypot(*(ctrl[1:] - ctrl[:-1]).T))])
    cs = CubicSpline(t, ctrl, axis=0)
    fine = cs(np.linspace(0.0, t[-1], max(8, int(t[-1] * 4))))
    return resample_polyline(as_polyline(fine), spacing)


def gen_tree(params: SynthParams) -> VesselAnnotation:
    """A branching tree of smooth polylines; children start exactly at a
    parent point.  Deterministic for a given seed."""
    rng = np.random.default_rng([params.seed, 0])
    h, w = params.size
    margin = params.amplitude + 30.0
    lo = np.array([margin, margin])
    hi = np.array([w - margin, h - margin])

    def walk(start: np.ndarray, heading: float, step: float, n_ctrl: int, jitter: float) -> np.ndarray:
        pts = [start.copy()]
        pos = start.copy()
        hd = heading
        for _ in range(n_ctrl - 1):
            hd += rng.uniform(-jitter, jitter)
            pos = pos + step * np.array([np.cos(hd), np.sin(hd)])
            # reflect off the safe region boundaries
            for a in range(2):
                if pos[a] < lo[a]:
                    pos[a] = 2 * lo[a] - pos[a]
                    hd = np.pi - hd if a == 0 else -hd
                if pos[a] > hi[a]:
                    pos[a] = 2 * hi[a] - pos[a]
                    hd = np.pi - hd if a == 0 else -hd
            pts.append(pos.copy())
        return np.asarray(pts)

    root_len = 0.55 * min(h, w)
    start = np.array([
        rng.uniform(lo[0], lo[0] + 0.25 * (hi[0] - lo[0])),
        rng.uniform(lo[1] + 0.2 * (hi[1] - lo[1]), hi[1] - 0.2 * (hi[1] - lo[1])),
    ])
    heading = rng.uniform(-0.9, 0.9)
    branches = [_spline_through(walk(start, heading, root_len / 5, 6, jitter=0.5))]
    levels = [0]

    frontier = [0]
    while len(branches) < params.branches and frontier:
        parent_idx = frontier.pop(0)
        parent = branches[parent_idx]
        n_children = min(2, params.branches - len(branches))
        for c in range(n_children):
            anchor_i = int(rng.integers(int(0.3 * len(parent)), int(0.7 * len(parent))))
            anchor = parent[anchor_i]
            local = parent[min(anchor_i + 5, len(parent) - 1)] - parent[max(anchor_i - 5, 0)]
            base = np.arctan2(local[1], local[0])
            side = 1.0 if c % 2 == 0 else -1.0
            child_heading = base + side * rng.uniform(0.6, 1.1)
            child_len = 0.6 * max(root_len, 60.0)
            child = _spline_through(walk(anchor, child_heading, child_len / 5, 5, jitter=0.35))
            child[0] = anchor  # exact attachment
            branches.append(as_polyline(child))
            levels.append(levels[parent_idx] + 1)
            if levels[-1] < params.depth - 1:
                frontier.append(len(branches) - 1)
            if len(branches) >= params.branches:
                break

    for b in branches:
        np.clip(b[:, 0], 2.0, w - 3.0, out=b[:, 0])
        np.clip(b[:, 1], 2.0, h - 3.0, out=b[:, 1])
    return VesselAnnotation([as_polyline(b) for b in branches], frame_index=0)


def branch_levels(tree: VesselAnnotation) -> list[int]:
    """Recover tree depth per branch: a branch whose first point lies on an
    earlier branch is that branch's child."""
    levels = [0] * len(tree.branches)
    for j, b in enumerate(tree.branches):
        for i in range(j):
            d = np.hypot(*(tree.branches[i] - b[0]).T).min()
            if d < 1e-6:
                levels[j] = levels[i] + 1
                break
    return levels


def _motion_field(points: np.ndarray, t: int, params: SynthParams) -> np.ndarray:
    h, w = params.size
    phase = np.sin(2.0 * np.pi * (t % params.frames_per_cycle) / params.frames_per_cycle)
    x, y = points[:, 0], points[:, 1]
    r = 0.9 + 0.1 * np.sin(2 * np.pi * x / w) * np.sin(2 * np.pi * y / h)
    phi = 0.9 + 0.5 * np.sin(2 * np.pi * (x + y) / (w + h))
    mag = params.amplitude * phase * r
    return np.column_stack([mag * np.cos(phi), mag * np.sin(phi)])


def deform_tree(tree: VesselAnnotation, t: int, params: SynthParams) -> VesselAnnotation:
    """Tree displaced by the periodic analytic motion field at frame ``t``.

    The displacement is exactly zero at t = 0 and every full cycle.
    """
    if t < 0:
        raise ValueError("frame index must be >= 0")
    out = tree.mapped(lambda b: as_polyline(b + _motion_field(b, t, params)))
    return out.with_frame(t)


def _render_frame(tree_t: VesselAnnotation, params: SynthParams, rng: np.random.Generator,
                  levels: list[int]) -> np.ndarray:
    h, w = params.size
    img = np.full((h, w), params.background)
    if params.gradient > 0:
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        img += params.gradient * np.sin(2 * np.pi * xx / w + 1.0) * np.sin(2 * np.pi * yy / h + 0.5)
    dip = np.zeros((h, w))
    reach = 4.0 * params.width + 2.0
    for b, lvl in zip(tree_t.branches, levels):
        dense = resample_polyline(b, 0.25)
        x0 = max(0, int(np.floor(dense[:, 0].min() - reach)))
        x1 = min(w, int(np.ceil(dense[:, 0].max() + reach)) + 1)
        y0 = max(0, int(np.floor(dense[:, 1].min() - reach)))
        y1 = min(h, int(np.ceil(dense[:, 1].max() + reach)) + 1)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        pts = np.column_stack([xx.ravel(), yy.ravel()]).astype(np.float64)
        d, _ = cKDTree(dense).query(pts)
        local = (params.contrast * 0.82 ** lvl) * np.exp(-(d ** 2) / (2.0 * params.width ** 2))
        dip[y0:y1, x0:x1] = np.maximum(dip[y0:y1, x0:x1], local.reshape(y1 - y0, x1 - x0))
    img -= dip
    if params.noise > 0:
        img = img + rng.normal(0.0, params.noise, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def render_sequence(tree: VesselAnnotation, params: SynthParams
                    ) -> tuple[list[np.ndarray], list[VesselAnnotation]]:
    """Render all frames and their ground-truth annotations.

    Frame ``t`` uses an independent noise stream derived from the seed, so
    the sequence is reproducible frame by frame.
    """
    levels = branch_levels(tree)
    frames = []
    truths = []
    for t in range(params.frames):
        tree_t = deform_tree(tree, t, params)
        rng_t = np.random.default_rng([params.seed, 1, t])
        frames.append(_render_frame(tree_t, params, rng_t, levels))
        truths.append(tree_t)
    return frames, truths
