import os
import subprocess
import sys

import numpy as np
import pytest

from polaron import _accel

needs_numba = pytest.mark.skipif(not _accel.NUMBA_KERNELS, reason="numba backend not active")


def _inputs():
    rng = np.random.default_rng(7)
    n = 3000
    nodes = np.linspace(0.0, 10.0, n)
    values = np.sqrt(nodes) * np.exp(-nodes / 5.0)
    t = np.concatenate([[0.0, 1e-13], np.logspace(-2, 3, 60)])
    g = np.linspace(0.0, 1.0, n)
    w = [rng.standard_normal(n) for _ in range(4)]
    z = rng.uniform(-0.9, 0.9, 300) + 0j
    x = -np.linspace(0.0, 50.0, 300)
    return {
        "panel_sums": (w[0], w[1], w[2], w[3], g),
        "filon_cos": (nodes, values, t),
        "cosine_sum": (nodes, values, t),
        "series_2f1": (0.5, 1.5, 2.5, z, 1e-14, 20000),
        "series_1f2": (0.75, 0.5, 1.75, x, 1e-12, 2000),
    }


def _first(out):
    return np.asarray(out[0] if isinstance(out, tuple) else out)


def test_numpy_kernels_complete():
    assert set(_accel.NUMPY_KERNELS) == set(_inputs())


@needs_numba
@pytest.mark.parametrize("name", sorted(_inputs()))
def test_backends_agree(name):
    args = _inputs()[name]
    a = _first(_accel.NUMPY_KERNELS[name](*args))
    b = _first(_accel.NUMBA_KERNELS[name](*args))
    scale = np.max(np.abs(a))
    assert np.max(np.abs(a - b)) <= 1e-9 * scale


@needs_numba
@pytest.mark.parametrize("name", ["series_2f1", "series_1f2"])
def test_series_diagnostics_agree(name):
    args = _inputs()[name]
    a = _accel.NUMPY_KERNELS[name](*args)
    b = _accel.NUMBA_KERNELS[name](*args)
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_array_equal(a[3], b[3])


def test_cosine_sum_matches_direct_sum():
    nodes = np.array([0.5, 1.0, 2.0])
    weight = np.array([1.0, -2.0, 0.25])
    t = np.array([0.0, 0.7, 3.0])
    ref = np.cos(np.outer(t, nodes)) @ weight
    np.testing.assert_allclose(_accel.cosine_sum(nodes, weight, t), ref, rtol=1e-14)


def test_filon_integrates_cosine_exactly_for_linear_data():
    nodes = np.linspace(0.0, 2.0, 9)
    t = np.array([0.0, 1.5, 40.0])
    got = _accel.filon_cos(nodes, 3.0 * nodes, t)
    tt = t[1:]
    ref = 3.0 * (2 * np.sin(2 * tt) / tt + (np.cos(2 * tt) - 1) / tt ** 2)
    assert abs(got[0] - 6.0) < 1e-14
    np.testing.assert_allclose(got[1:], ref, rtol=1e-10)


def test_backend_switch_by_environment():
    code = "from polaron import _accel; print(_accel.BACKEND, bool(_accel.NUMBA_KERNELS))"
    env = dict(os.environ, POLARON_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False"]
