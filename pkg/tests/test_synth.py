import numpy as np

from vesseltrack.core import as_polyline
from vesseltrack.synth import SynthParams, branch_levels, deform_tree, gen_tree, render_sequence

SMALL = SynthParams(seed=7, size=(256, 256), frames=4, branches=3, noise=0.05)


def test_single_branch_tree():
    p = SynthParams(seed=3, size=(256, 256), frames=1, branches=1, depth=1)
    tree = gen_tree(p)
    assert len(tree.branches) == 1
    assert len(tree.branches[0]) > 50


def test_same_seed_identical_tree():
    a = gen_tree(SMALL)
    b = gen_tree(SMALL)
    assert len(a.branches) == len(b.branches)
    assert all(np.array_equal(x, y) for x, y in zip(a.branches, b.branches))


def test_children_start_exactly_on_parent():
    tree = gen_tree(SMALL)
    levels = branch_levels(tree)
    assert len(tree.branches) == 3 and levels == [0, 1, 1]
    for j, lvl in enumerate(levels):
        if lvl == 0:
            continue
        d = min(np.hypot(*(tree.branches[i] - tree.branches[j][0]).T).min()
                for i in range(j) if levels[i] == lvl - 1)
        assert d == 0.0


def test_deform_identity_at_zero_and_full_cycle():
    tree = gen_tree(SMALL)
    for t in (0, SMALL.frames_per_cycle, 2 * SMALL.frames_per_cycle):
        out = deform_tree(tree, t, SMALL)
        assert all(np.array_equal(a, b) for a, b in zip(out.branches, tree.branches))


def test_quarter_cycle_displacement_range():
    tree = gen_tree(SMALL)
    quarter = SMALL.frames_per_cycle // 4
    out = deform_tree(tree, quarter, SMALL)
    disp = max(np.hypot(*(a - b).T).max() for a, b in zip(out.branches, tree.branches))
    assert 3.0 <= disp <= 4.0  # amplitude 4, spatial modulation in [0.8, 1]


def test_consecutive_displacement_bound():
    tree = gen_tree(SMALL)
    bound = SMALL.amplitude * np.sin(2 * np.pi / SMALL.frames_per_cycle) + 0.05
    for t in range(12):
        a = deform_tree(tree, t, SMALL).all_points()
        b = deform_tree(tree, t + 1, SMALL).all_points()
        assert np.hypot(*(a - b).T).mean() <= bound


def test_axis_intensity_no_noise():
    p = SynthParams(seed=5, size=(192, 192), frames=1, branches=1, depth=1, noise=0.0)
    tree = gen_tree(p)
    frames, _ = render_sequence(tree, p)
    mid = tree.branches[0][len(tree.branches[0]) // 2]
    val = frames[0][int(round(mid[1])), int(round(mid[0]))]
    assert abs(val - (p.background - p.contrast)) < 0.02


def test_axis_is_local_minimum_within_half_pixel():
    p = SynthParams(seed=5, size=(192, 192), frames=1, branches=1, depth=1, noise=0.0)
    tree = gen_tree(p)
    frames, _ = render_sequence(tree, p)
    frame = frames[0]
    b = tree.branches[0]
    for k in range(20, len(b) - 20, 25):
        x, y = b[k]
        t = b[k + 1] - b[k - 1]
        nrm = np.array([-t[1], t[0]]) / np.hypot(*t)
        offs = np.linspace(-3, 3, 25)
        vals = [frame[int(round(y + o * nrm[1])), int(round(x + o * nrm[0]))] for o in offs]
        assert abs(offs[int(np.argmin(vals))]) <= 0.5 + (offs[1] - offs[0])


def test_rendering_deterministic():
    f1, g1 = render_sequence(gen_tree(SMALL), SMALL)
    f2, g2 = render_sequence(gen_tree(SMALL), SMALL)
    assert all(np.array_equal(a, b) for a, b in zip(f1, f2))
    assert all(np.array_equal(x.branches[0], y.branches[0]) for x, y in zip(g1, g2))


def test_truth_polylines_valid_everywhere():
    frames, truths = render_sequence(gen_tree(SMALL), SMALL)
    h, w = SMALL.size
    for ann in truths:
        for b in ann.branches:
            as_polyline(b)  # raises on violation
            cheb = np.abs(b[1:] - b[:-1]).max(axis=1)
            assert cheb.max() <= 2.0
            assert b[:, 0].min() >= 0 and b[:, 0].max() < w
            assert b[:, 1].min() >= 0 and b[:, 1].max() < h


def test_frames_in_unit_range():
    frames, _ = render_sequence(gen_tree(SMALL), SMALL)
    for f in frames:
        assert f.min() >= 0.0 and f.max() <= 1.0
