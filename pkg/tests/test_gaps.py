import math

import numpy as np
from scipy import ndimage

from conftest import horizontal_tube
from vesseltrack.gaps import ConnectionCostMap, bridge_gaps, connection_cost, skeleton_endpoints
from vesseltrack.ridge import extract_centerline, vesselness

EIGHT = np.ones((3, 3), bool)


def _tube_skeleton(gap=None):
    frame, line = horizontal_tube(shape=(64, 128), y=32.0)
    resp = vesselness(frame, (1, 2, 3, 4))
    sk = extract_centerline(resp, np.ones(frame.shape, bool))
    if gap is not None:
        sk[:, gap[0]:gap[1]] = False
    return frame, resp, sk


def test_cost_low_on_skeleton_high_far_away():
    _, resp, sk = _tube_skeleton()
    costs = connection_cost(resp, sk)
    ys, xs = np.nonzero(sk)
    on = costs.cost[ys[len(ys) // 2], xs[len(xs) // 2]]
    assert on < 0.3  # p ~ w1 + w2 + w3 * coherence, nearly free to traverse
    far = costs.cost[5, 5]  # no response, no saliency, no endpoint nearby
    assert abs(far - (-math.log(0.2 * 0.5))) < 0.15


def test_cost_probability_floor():
    c = ConnectionCostMap.from_probability(np.zeros((4, 4)))
    assert np.allclose(c.cost, -math.log(1e-6))


def _value_iteration_dists(cost, src, allowed):
    """Independent optimal-path oracle: relax all 8 moves until stable."""
    h, w = cost.shape
    d = np.full((h, w), np.inf)
    d[src[1], src[0]] = 0.0
    moves = [(dx, dy, math.sqrt(2) if dx and dy else 1.0)
             for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
    while True:
        prev = d.copy()
        for dx, dy, ln in moves:
            shifted = np.full_like(d, np.inf)
            ys = slice(max(0, dy), h + min(0, dy))
            xs = slice(max(0, dx), w + min(0, dx))
            ys_src = slice(max(0, -dy), h + min(0, -dy))
            xs_src = slice(max(0, -dx), w + min(0, -dx))
            step = 0.5 * (cost[ys_src, xs_src] + cost[ys, xs]) * ln
            shifted[ys, xs] = prev[ys_src, xs_src] + step
            d = np.minimum(d, shifted)
        d[~allowed] = np.inf
        if np.array_equal(np.nan_to_num(d, posinf=1e18), np.nan_to_num(prev, posinf=1e18)):
            return d


def test_gap_cost_prefers_axis_over_any_offaxis_path():
    _, resp, sk = _tube_skeleton(gap=(60, 66))
    costs = connection_cost(resp, sk)
    # crop around the gap; endpoints on the axis at both sides
    y0, y1, x0, x1 = 22, 42, 55, 75
    crop = costs.cost[y0:y1, x0:x1]
    a = (59 - x0, 32 - y0)
    b = (66 - x0, 32 - y0)
    allowed = np.ones(crop.shape, bool)
    da = _value_iteration_dists(crop, a, allowed)
    db = _value_iteration_dists(crop, b, allowed)
    optimal = da[b[1], b[0]]
    axis_cost = sum(0.5 * (crop[a[1], x] + crop[a[1], x + 1]) for x in range(a[0], b[0]))
    assert axis_cost <= optimal + 1e-9
    off_axis = np.broadcast_to(np.abs(np.arange(y0, y1)[:, None] - 32) >= 2, crop.shape)
    through = da + db
    assert np.all(through[off_axis] > axis_cost + 1e-9)


def test_bridge_closes_gap_on_axis():
    _, resp, sk = _tube_skeleton(gap=(60, 66))
    _, n_before = ndimage.label(sk, structure=EIGHT)
    assert n_before >= 2
    out = bridge_gaps(sk, connection_cost(resp, sk), 10.0)
    _, n_after = ndimage.label(out, structure=EIGHT)
    assert n_after == 1
    added = out & ~sk
    ys, xs = np.nonzero(added)
    assert len(ys) > 0
    assert np.abs(ys - 32).max() <= 1.0


def test_bridge_leaves_connected_input_alone():
    _, resp, sk = _tube_skeleton()
    out = bridge_gaps(sk, connection_cost(resp, sk), 10.0)
    assert np.array_equal(out, sk)


def test_bridge_respects_distance_gate():
    sk = np.zeros((64, 96), bool)
    sk[16, 10:80] = True
    sk[46, 10:80] = True  # 30 px away
    resp = vesselness(np.full((64, 96), 0.5), (1, 2))
    out = bridge_gaps(sk, connection_cost(resp, sk), 10.0)
    _, n = ndimage.label(out, structure=EIGHT)
    assert n == 2


def test_bridge_idempotent_and_component_monotone():
    _, resp, sk = _tube_skeleton(gap=(60, 66))
    costs = connection_cost(resp, sk)
    once = bridge_gaps(sk, costs, 10.0)
    twice = bridge_gaps(once, connection_cost(resp, once), 10.0)
    assert np.array_equal(once, twice)
    _, n0 = ndimage.label(sk, structure=EIGHT)
    _, n1 = ndimage.label(once, structure=EIGHT)
    assert n1 <= n0


def test_bridge_pixels_stay_near_endpoints():
    _, resp, sk = _tube_skeleton(gap=(58, 68))
    eps = skeleton_endpoints(sk)
    out = bridge_gaps(sk, connection_cost(resp, sk), 12.0)
    added = np.argwhere(out & ~sk)  # (y, x)
    for y, x in added:
        d = np.hypot(eps[:, 0] - x, eps[:, 1] - y)
        assert np.sort(d)[:2].max() <= 12.0 * 1.5
