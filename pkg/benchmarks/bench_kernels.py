"""Compare the compiled kernels with the numpy/heapq fallback.

    python benchmarks/bench_kernels.py [--sizes 32,64,128] [--repeat 3]

Prints one row per (kernel, size) with the best wall time of each backend
and the speedup. Both backends get identical inputs and their outputs are
checked for equality before timing.
"""
import argparse
import math
import time

import numpy as np

from fppkit import kernels
from fppkit.kernels import fallback


def _best(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _cases(L, rng):
    shape = (L, L)
    m = 2 * L * L
    Wi = rng.integers(0, 2, size=m).astype(np.int64)
    Wf = rng.exponential(1.0, size=m)
    src = (L // 2) * L + L // 2
    K = L
    return [
        ("dijkstra_heap int", lambda mod: mod.dijkstra_heap(Wi, shape, src)),
        ("dijkstra_heap float", lambda mod: mod.dijkstra_heap(Wf, shape, src)),
        ("dijkstra_bucket int", lambda mod: mod.dijkstra_bucket(Wi, shape, src, -1, None, 1)),
        ("restricted_dp G", lambda mod: mod.restricted_dp(Wi, shape, src, K, False, False, -1)),
        ("restricted_dp G0", lambda mod: mod.restricted_dp(Wi, shape, src, K, True, False, -1)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="32,64,128", help="side lengths of the square windows")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'side':>6}{'cython s':>12}{'python s':>12}{'speedup':>10}")
    for L in (int(s) for s in args.sizes.split(",")):
        for name, run in _cases(L, rng):
            for a, b in zip(run(kernels.compiled), run(fallback)):
                np.testing.assert_array_equal(a, b)
            tc = _best(lambda: run(kernels.compiled), args.repeat)
            tp = _best(lambda: run(fallback), args.repeat)
            print(f"{name:<22}{L:>6}{tc:>12.5f}{tp:>12.5f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
