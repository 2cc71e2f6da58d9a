import os
import subprocess
import sys

import numpy as np
import pytest

from halfflow import _kernels_py, kernels

BACKENDS = kernels.backends()
compiled_only = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def _points(rng, m, n):
    return np.ascontiguousarray(rng.standard_normal((m, n)) * 2.0)


@compiled_only
@pytest.mark.parametrize("n", [2, 3, 6])
def test_sphere_kernels_agree(n):
    rng = np.random.default_rng(n)
    p, w = _points(rng, 500, n), _points(rng, 500, n)
    ref, fast = BACKENDS["python"], BACKENDS["cython"]
    for a, b in zip(ref.sphere_nearest(p, 1.7), fast.sphere_nearest(p, 1.7)):
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(ref.sphere_tangent(p, w), fast.sphere_tangent(p, w), rtol=1e-13, atol=1e-14)


@compiled_only
def test_circle_pair_kernels_agree():
    rng = np.random.default_rng(3)
    p, w = _points(rng, 500, 3), _points(rng, 500, 3)
    ref, fast = BACKENDS["python"], BACKENDS["cython"]
    for a, b in zip(ref.circle_pair_nearest(p, 1.1, 0.4), fast.circle_pair_nearest(p, 1.1, 0.4)):
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(
        ref.circle_pair_tangent(p, w), fast.circle_pair_tangent(p, w), rtol=1e-13, atol=1e-14
    )


def _brute_correlate(density, weights, support):
    ns, M = density.shape
    out = np.zeros(M)
    for j in range(M):
        for i in range(ns):
            for o in range(-support, support + 1):
                out[j] += weights[i, o % M] * density[i, (j + o) % M]
    return out


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_correlate_matches_brute_force(name):
    rng = np.random.default_rng(11)
    ns, M, support = 5, 64, 9
    density = np.ascontiguousarray(rng.random((ns, M)))
    weights = np.zeros((ns, M))
    for o in range(-support, support + 1):
        weights[:, o % M] = rng.random(ns)
    out = BACKENDS[name].correlate_circular(density, weights, support)
    np.testing.assert_allclose(out, _brute_correlate(density, weights, support), rtol=1e-12)


def test_nan_on_degenerate_points():
    nearest, _, norm = _kernels_py.sphere_nearest(np.zeros((1, 3)), 1.0)
    assert np.all(np.isnan(nearest)) and norm[0] == 0.0


def test_environment_variable_forces_fallback():
    env = dict(os.environ, HALFFLOW_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import halfflow.kernels as k; print(k.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "python"


@compiled_only
def test_default_backend_is_compiled():
    env = {k: v for k, v in os.environ.items() if k != "HALFFLOW_PURE_PYTHON"}
    out = subprocess.run(
        [sys.executable, "-c", "import halfflow.kernels as k; print(k.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "cython"


@pytest.mark.parametrize("support", [3, (kernels.DIRECT_STENCIL_MAX - 1) // 2, 50])  # direct, direct, FFT
def test_dispatch_agrees_across_stencil_widths(support):
    rng = np.random.default_rng(support)
    ns, M = 3, 128
    density = np.ascontiguousarray(rng.random((ns, M)))
    weights = np.zeros((ns, M))
    for o in range(-support, support + 1):
        weights[:, o % M] = rng.random(ns)
    out = kernels.correlate_circular(density, weights, support)
    np.testing.assert_allclose(out, _brute_correlate(density, weights, support), rtol=1e-12)
