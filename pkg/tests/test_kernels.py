import os
import subprocess
import sys

import numpy as np
import pytest

from vesseltrack import _kernels
from vesseltrack._kernels import _numpy_impl

numba_impl = pytest.importorskip("vesseltrack._kernels._numba_impl")


def test_active_backend_reported():
    assert _kernels.backend() in ("numba", "numpy")


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, VESSELTRACK_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", "import vesseltrack; print(vesseltrack.kernel_backend())"],
        capture_output=True, text=True, env=env,
    )
    assert out.returncode == 0
    assert out.stdout.strip() == "numpy"


def test_default_prefers_numba():
    env = {k: v for k, v in os.environ.items() if k != "VESSELTRACK_NUMBA"}
    out = subprocess.run(
        [sys.executable, "-c", "import vesseltrack; print(vesseltrack.kernel_backend())"],
        capture_output=True, text=True, env=env,
    )
    assert out.stdout.strip() == "numba"


def test_dtw_tables_bitwise_equal():
    rng = np.random.default_rng(0)
    for _ in range(60):
        m, l = rng.integers(1, 40, 2)
        d = rng.random((m, l)) * rng.uniform(0.1, 50)
        assert np.array_equal(_numpy_impl.dtw_accumulate(d), numba_impl.dtw_accumulate(d))


def test_thin_bitwise_equal():
    rng = np.random.default_rng(1)
    for _ in range(25):
        mask = rng.random((48, 64)) < rng.uniform(0.2, 0.6)
        assert np.array_equal(_numpy_impl.thin(mask), numba_impl.thin(mask))


def test_thin_preserves_connectivity():
    from scipy import ndimage

    rng = np.random.default_rng(2)
    eight = np.ones((3, 3), bool)
    for _ in range(10):
        mask = ndimage.binary_dilation(rng.random((40, 40)) < 0.08, structure=eight, iterations=2)
        _, n_before = ndimage.label(mask, structure=eight)
        thinned = _numpy_impl.thin(mask)
        _, n_after = ndimage.label(thinned, structure=eight)
        assert n_after == n_before


def test_block_match_backends_agree_on_texture():
    rng = np.random.default_rng(3)
    key = rng.random((160, 160))
    cur = np.roll(key, (5, -3), axis=(0, 1))
    ys, xs = np.meshgrid(np.arange(8, 130, 16), np.arange(8, 130, 16), indexing="ij")
    ys = ys.ravel().astype(np.int64)
    xs = xs.ravel().astype(np.int64)
    zero = np.zeros_like(ys)
    dy_np, dx_np, s_np = _numpy_impl.block_match(key, cur, ys, xs, zero, zero, 16, 8)
    dy_nb, dx_nb, s_nb = numba_impl.block_match(key, cur, ys, xs, zero, zero, 16, 8)
    assert np.array_equal(dy_np, dy_nb)
    assert np.array_equal(dx_np, dx_nb)
    assert np.allclose(s_np, s_nb, atol=1e-9)
    assert np.all(dy_np == 5) and np.all(dx_np == -3)


def test_block_match_flat_blocks_invalid():
    flat = np.full((64, 64), 0.5)
    ys = xs = np.array([8, 24], dtype=np.int64)
    zero = np.zeros_like(ys)
    for impl in (_numpy_impl, numba_impl):
        dy, dx, score = impl.block_match(flat, flat, ys, xs, zero, zero, 16, 4)
        assert np.all(score == -2.0)
        assert np.all(dy == 0) and np.all(dx == 0)
