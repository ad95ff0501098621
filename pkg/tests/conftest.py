import numpy as np
import pytest

from vesseltrack.core import as_polyline


def tube_frame(shape, polyline, width=2.0, contrast=0.5, background=0.8, noise=0.0, seed=0):
    """Render a dark tube with Gaussian cross-section along a polyline."""
    from scipy.spatial import cKDTree
    from vesseltrack.core import resample_polyline

    h, w = shape
    dense = resample_polyline(as_polyline(polyline), 0.25)
    yy, xx = np.mgrid[0:h, 0:w]
    pts = np.column_stack([xx.ravel(), yy.ravel()]).astype(np.float64)
    d, _ = cKDTree(dense).query(pts)
    img = background - contrast * np.exp(-(d ** 2) / (2.0 * width ** 2)).reshape(h, w)
    if noise > 0:
        img = img + np.random.default_rng(seed).normal(0.0, noise, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def horizontal_tube(shape=(96, 128), y=40.3, width=2.0, **kw):
    h, w = shape
    line = np.array([[4.0, y], [w - 5.0, y]])
    return tube_frame(shape, line, width=width, **kw), line


def axis_coverage(skeleton, axis_points, tol=1.0):
    """Fraction of axis points with a skeleton pixel within ``tol``."""
    from scipy import ndimage

    if not skeleton.any():
        return 0.0
    dist = ndimage.distance_transform_edt(~skeleton)
    cov = []
    for x, y in axis_points:
        yi, xi = int(round(y)), int(round(x))
        if 0 <= yi < skeleton.shape[0] and 0 <= xi < skeleton.shape[1]:
            cov.append(dist[yi, xi] <= tol)
    return float(np.mean(cov))


@pytest.fixture(scope="session")
def small_sequence():
    """A small rendered sequence shared by tracker-level tests."""
    from vesseltrack.synth import SynthParams, gen_tree, render_sequence

    params = SynthParams(seed=7, size=(256, 256), frames=4, branches=3, noise=0.05)
    tree = gen_tree(params)
    frames, truths = render_sequence(tree, params)
    return params, frames, truths
