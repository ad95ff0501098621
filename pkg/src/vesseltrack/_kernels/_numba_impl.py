"""Numba-compiled kernels. Compiled lazily on first call, cached on disk."""

import numpy as np
from numba import njit


@njit(cache=True)
def dtw_accumulate(d: np.ndarray) -> np.ndarray:
    m, l = d.shape
    acc = np.empty((m, l), dtype=np.float64)
    acc[0, 0] = d[0, 0]
    for j in range(1, l):
        acc[0, j] = acc[0, j - 1] + d[0, j]
    for i in range(1, m):
        acc[i, 0] = acc[i - 1, 0] + d[i, 0]
    for i in range(1, m):
        for j in range(1, l):
            best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            if acc[i - 1, j - 1] < best:
                best = acc[i - 1, j - 1]
            acc[i, j] = d[i, j] + best
    return acc


@njit(cache=True)
def block_match(key, cur, ys, xs, init_dy, init_dx, block, radius, penalty=1e-3):
    h, w = cur.shape
    g = len(ys)
    best_dy = np.empty(g, dtype=np.int64)
    best_dx = np.empty(g, dtype=np.int64)
    best_score = np.full(g, -2.0)
    r2 = float(radius * radius) if radius > 0 else 1.0
    n = float(block * block)
    for gi in range(g):
        y0 = ys[gi]
        x0 = xs[gi]
        best_dy[gi] = init_dy[gi]
        best_dx[gi] = init_dx[gi]
        k_sum = 0.0
        k_sq = 0.0
        for a in range(block):
            for b in range(block):
                v = key[y0 + a, x0 + b]
                k_sum += v
                k_sq += v * v
        k_mean = k_sum / n
        k_var = k_sq / n - k_mean * k_mean
        if k_var < 0.0:
            k_var = 0.0
        k_std = np.sqrt(k_var)
        if k_std <= 1e-12:
            continue
        for od in range(-radius, radius + 1):
            ty = y0 + init_dy[gi] + od
            if ty < 0 or ty + block > h:
                continue
            for ox in range(-radius, radius + 1):
                tx = x0 + init_dx[gi] + ox
                if tx < 0 or tx + block > w:
                    continue
                c_sum = 0.0
                c_sq = 0.0
                kc = 0.0
                for a in range(block):
                    for b in range(block):
                        kv = key[y0 + a, x0 + b]
                        cv = cur[ty + a, tx + b]
                        c_sum += cv
                        c_sq += cv * cv
                        kc += kv * cv
                c_mean = c_sum / n
                c_var = c_sq / n - c_mean * c_mean
                if c_var < 0.0:
                    c_var = 0.0
                c_std = np.sqrt(c_var)
                if c_std <= 1e-12:
                    continue
                ncc = (kc / n - k_mean * c_mean) / (k_std * c_std)
                score = ncc - penalty * (od * od + ox * ox) / r2
                if score > best_score[gi]:
                    best_score[gi] = score
                    best_dy[gi] = init_dy[gi] + od
                    best_dx[gi] = init_dx[gi] + ox
    return best_dy, best_dx, best_score


@njit(cache=True)
def _thin_pass(m, phase, kill):
    h, w = m.shape
    any_kill = False
    for y in range(h):
        for x in range(w):
            kill[y, x] = False
            if not m[y, x]:
                continue
            p2 = m[y - 1, x] if y > 0 else False
            p3 = m[y - 1, x + 1] if (y > 0 and x + 1 < w) else False
            p4 = m[y, x + 1] if x + 1 < w else False
            p5 = m[y + 1, x + 1] if (y + 1 < h and x + 1 < w) else False
            p6 = m[y + 1, x] if y + 1 < h else False
            p7 = m[y + 1, x - 1] if (y + 1 < h and x > 0) else False
            p8 = m[y, x - 1] if x > 0 else False
            p9 = m[y - 1, x - 1] if (y > 0 and x > 0) else False
            b = int(p2) + int(p3) + int(p4) + int(p5) + int(p6) + int(p7) + int(p8) + int(p9)
            if b < 2 or b > 6:
                continue
            a = 0
            if (not p2) and p3:
                a += 1
            if (not p3) and p4:
                a += 1
            if (not p4) and p5:
                a += 1
            if (not p5) and p6:
                a += 1
            if (not p6) and p7:
                a += 1
            if (not p7) and p8:
                a += 1
            if (not p8) and p9:
                a += 1
            if (not p9) and p2:
                a += 1
            if a != 1:
                continue
            if phase == 0:
                if (p2 and p4 and p6) or (p4 and p6 and p8):
                    continue
            else:
                if (p2 and p4 and p8) or (p2 and p6 and p8):
                    continue
            kill[y, x] = True
            any_kill = True
    if any_kill:
        for y in range(h):
            for x in range(w):
                if kill[y, x]:
                    m[y, x] = False
    return any_kill


@njit(cache=True)
def thin(mask: np.ndarray) -> np.ndarray:
    m = mask.copy()
    kill = np.zeros_like(m)
    while True:
        changed = _thin_pass(m, 0, kill)
        changed = _thin_pass(m, 1, kill) or changed
        if not changed:
            return m
