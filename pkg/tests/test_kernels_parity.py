"""The compiled kernels, the bucket queue and the numpy fallback agree bit for bit."""
import math

import numpy as np
import pytest

from fppkit import kernels
from fppkit.kernels import fallback

needs_ext = pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")

SHAPES = [(7,), (5, 6), (9, 4), (3, 4, 5)]


def _weights(rng, shape, kind):
    m = len(shape) * math.prod(shape)
    if kind == "int":
        return rng.integers(0, 6, size=m).astype(np.int64)
    if kind == "zeros":
        return (rng.random(m) < 0.5).astype(np.int64) * 3
    return rng.exponential(1.0, size=m)


def _mask(rng, shape, source):
    n = math.prod(shape)
    allowed = (rng.random(n) < 0.8).astype(np.uint8)
    allowed[source] = 1
    return allowed


def _same(a, b):
    for x, y in zip(a, b):
        np.testing.assert_array_equal(np.asarray(x), np.asarray(y))


@needs_ext
@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("kind", ["int", "zeros", "float"])
@pytest.mark.parametrize("seed", range(4))
def test_heap_matches_fallback(shape, kind, seed):
    rng = np.random.default_rng(seed)
    W = _weights(rng, shape, kind)
    n = math.prod(shape)
    src = int(rng.integers(n))
    _same(kernels.compiled.dijkstra_heap(W, shape, src), fallback.dijkstra_heap(W, shape, src))
    allowed = _mask(rng, shape, src)
    _same(kernels.compiled.dijkstra_heap(W, shape, src, -1, allowed), fallback.dijkstra_heap(W, shape, src, -1, allowed))


@needs_ext
@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("kind", ["int", "zeros"])
@pytest.mark.parametrize("seed", range(4))
def test_bucket_matches_heap(shape, kind, seed):
    rng = np.random.default_rng(100 + seed)
    W = _weights(rng, shape, kind)
    n = math.prod(shape)
    src = int(rng.integers(n))
    full = kernels.compiled.dijkstra_heap(W, shape, src)
    _same(kernels.compiled.dijkstra_bucket(W, shape, src, -1, None, int(W.max())), full)
    allowed = _mask(rng, shape, src)
    _same(kernels.compiled.dijkstra_bucket(W, shape, src, -1, allowed, int(W.max())),
          kernels.compiled.dijkstra_heap(W, shape, src, -1, allowed))


@pytest.mark.parametrize("impl", ["compiled", "fallback"])
def test_early_stop_keeps_target_exact(impl):
    mod = kernels.compiled if impl == "compiled" else fallback
    if mod is None:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(7)
    shape = (8, 8)
    W = _weights(rng, shape, "int")
    full_t, full_h, _ = mod.dijkstra_heap(W, shape, 0)
    for stop in (9, 27, 63):
        t, h, settled = mod.dijkstra_heap(W, shape, 0, stop)
        assert settled[stop] and t[stop] == full_t[stop] and h[stop] == full_h[stop]
        np.testing.assert_array_equal(t[settled.astype(bool)], full_t[settled.astype(bool)])


@needs_ext
@pytest.mark.parametrize("shape", [(9, 9), (5, 5, 5)])
@pytest.mark.parametrize("kind", ["int", "float"])
@pytest.mark.parametrize("zero_steps", [False, True])
@pytest.mark.parametrize("keep_all", [False, True])
def test_restricted_dp_matches_fallback(shape, kind, zero_steps, keep_all):
    rng = np.random.default_rng(11)
    W = _weights(rng, shape, kind)
    n = math.prod(shape)
    src = n // 2
    tgt = int(rng.integers(n))
    _same(kernels.compiled.restricted_dp(W, shape, src, 7, zero_steps, keep_all, tgt),
          fallback.restricted_dp(W, shape, src, 7, zero_steps, keep_all, tgt))


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    assert (kernels.compiled is None) == (kernels.BACKEND == "python")


def test_pure_python_switch():
    import os
    import subprocess
    import sys

    env = dict(os.environ, FPPKIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import fppkit; print(fppkit.BACKEND)"], env=env,
                         capture_output=True, text=True, check=True).stdout
    assert out.strip() == "python"
