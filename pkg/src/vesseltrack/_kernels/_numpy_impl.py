"""Pure-numpy kernel fallbacks.

Arithmetic is kept identical to the numba backend where the result is
consumed exactly (the DTW table and thinning are bit-for-bit equal); block
matching may differ in float rounding of the NCC score because reductions
sum in a different order.
"""

import numpy as np


def dtw_accumulate(d: np.ndarray) -> np.ndarray:
    """Accumulated-cost table of the DTW recurrence, anti-diagonal sweep.

    First row and column accumulate along their only predecessor; interior
    cells add the minimum of left, up and diagonal.
    """
    d = np.ascontiguousarray(d, dtype=np.float64)
    m, l = d.shape
    acc = np.empty_like(d)
    acc[0, :] = np.cumsum(d[0, :])
    acc[:, 0] = np.cumsum(d[:, 0])
    for k in range(2, m + l - 1):
        lo = max(1, k - l + 1)
        hi = min(m - 1, k - 1)
        if lo > hi:
            continue
        ii = np.arange(lo, hi + 1)
        jj = k - ii
        best = np.minimum(acc[ii - 1, jj], acc[ii, jj - 1])
        np.minimum(best, acc[ii - 1, jj - 1], out=best)
        acc[ii, jj] = d[ii, jj] + best
    return acc


def block_match(
    key: np.ndarray,
    cur: np.ndarray,
    ys: np.ndarray,
    xs: np.ndarray,
    init_dy: np.ndarray,
    init_dx: np.ndarray,
    block: int,
    radius: int,
    penalty: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """NCC search of key blocks inside ``cur`` around per-block initial offsets.

    ``ys``/``xs`` are top-left anchors of ``block``-sized key blocks.  Returns
    total displacements (initial plus the best offset within ``[-radius,
    radius]``) and the best penalized NCC score; blocks that never saw a
    valid in-bounds, non-flat comparison keep a score of -2.
    """
    h, w = cur.shape
    g = len(ys)
    off = np.arange(block)
    by = ys[:, None, None] + off[None, :, None]
    bx = xs[:, None, None] + off[None, None, :]
    kb = key[by, bx].reshape(g, -1)
    k_mean = kb.mean(axis=1)
    k_var = (kb * kb).mean(axis=1) - k_mean * k_mean
    k_std = np.sqrt(np.maximum(k_var, 0.0))
    k_ok = k_std > 1e-12

    best_score = np.full(g, -2.0)
    best_dy = init_dy.astype(np.int64).copy()
    best_dx = init_dx.astype(np.int64).copy()
    r2 = float(radius * radius) if radius > 0 else 1.0

    for od in range(-radius, radius + 1):
        ty0 = ys + init_dy + od
        for ox in range(-radius, radius + 1):
            tx0 = xs + init_dx + ox
            ok = k_ok & (ty0 >= 0) & (ty0 + block <= h) & (tx0 >= 0) & (tx0 + block <= w)
            if not ok.any():
                continue
            idx = np.nonzero(ok)[0]
            cb = cur[by[idx] + (init_dy[idx] + od)[:, None, None],
                     bx[idx] + (init_dx[idx] + ox)[:, None, None]].reshape(len(idx), -1)
            c_mean = cb.mean(axis=1)
            c_var = (cb * cb).mean(axis=1) - c_mean * c_mean
            c_std = np.sqrt(np.maximum(c_var, 0.0))
            cov = (kb[idx] * cb).mean(axis=1) - k_mean[idx] * c_mean
            denom = k_std[idx] * c_std
            ncc = np.where(c_std > 1e-12, cov / np.where(denom > 0, denom, 1.0), -2.0)
            score = ncc - penalty * (od * od + ox * ox) / r2
            score[c_std <= 1e-12] = -2.0
            upd = score > best_score[idx]
            sel = idx[upd]
            best_score[sel] = score[upd]
            best_dy[sel] = init_dy[sel] + od
            best_dx[sel] = init_dx[sel] + ox
    return best_dy, best_dx, best_score


def _neighbors(padded: np.ndarray):
    p2 = padded[:-2, 1:-1]
    p3 = padded[:-2, 2:]
    p4 = padded[1:-1, 2:]
    p5 = padded[2:, 2:]
    p6 = padded[2:, 1:-1]
    p7 = padded[2:, :-2]
    p8 = padded[1:-1, :-2]
    p9 = padded[:-2, :-2]
    return p2, p3, p4, p5, p6, p7, p8, p9


def thin(mask: np.ndarray) -> np.ndarray:
    """Two-subiteration morphological thinning to a one-pixel-wide skeleton."""
    m = mask.astype(bool).copy()
    while True:
        changed = False
        for phase in (0, 1):
            padded = np.zeros((m.shape[0] + 2, m.shape[1] + 2), dtype=bool)
            padded[1:-1, 1:-1] = m
            nb = _neighbors(padded)
            b = np.zeros(m.shape, dtype=np.int64)
            for pn in nb:
                b += pn
            ring = list(nb) + [nb[0]]
            a = np.zeros(m.shape, dtype=np.int64)
            for u, v in zip(ring[:-1], ring[1:]):
                a += (~u) & v
            p2, _, p4, _, p6, _, p8, _ = nb
            if phase == 0:
                extra = ~(p2 & p4 & p6) & ~(p4 & p6 & p8)
            else:
                extra = ~(p2 & p4 & p8) & ~(p2 & p6 & p8)
            kill = m & (b >= 2) & (b <= 6) & (a == 1) & extra
            if kill.any():
                m &= ~kill
                changed = True
        if not changed:
            return m
