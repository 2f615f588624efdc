"""Pure-Python/numpy implementations of the kernels in ``_kernels.pyx``.

Same signatures and return values; selected when the compiled module is
missing or ``FPPKIT_PURE_PYTHON=1``. No bucket queue here: integer weights go
through the same heap.
"""
from __future__ import annotations

import heapq
import math

import numpy as np


def _strides(shape):
    st = [1] * len(shape)
    for i in range(len(shape) - 2, -1, -1):
        st[i] = st[i + 1] * shape[i + 1]
    return st


def dijkstra_heap(W, shape, source, stop=-1, allowed=None):
    shape = tuple(int(s) for s in shape)
    d = len(shape)
    n = math.prod(shape)
    if not 0 <= source < n:
        raise ValueError("source outside window")
    if allowed is not None and not allowed[source]:
        raise ValueError("source not in allowed region")
    st = _strides(shape)
    Wl = W.tolist()
    mask = None if allowed is None else allowed.tolist()
    zero = W.dtype.type(0).item()
    time = [zero] * n
    hops = [0] * n
    reached = [False] * n
    settled = [False] * n
    reached[source] = True
    heap = [(zero, 0, source)]
    stop_t = None
    while heap:
        t, h, v = heapq.heappop(heap)
        if settled[v] or t != time[v] or h != hops[v]:
            continue
        if stop_t is not None and t > stop_t:
            break
        settled[v] = True
        if v == stop:
            stop_t = t
        for i in range(d):
            c = (v // st[i]) % shape[i]
            for k in (0, 1):
                if k == 0:
                    if c + 1 >= shape[i]:
                        continue
                    u = v + st[i]
                    w = Wl[i * n + v]
                else:
                    if c == 0:
                        continue
                    u = v - st[i]
                    w = Wl[i * n + u]
                if settled[u] or (mask is not None and not mask[u]):
                    continue
                nt = t + w
                nh = h + 1
                if not reached[u] or nt < time[u] or (nt == time[u] and nh < hops[u]):
                    time[u] = nt
                    hops[u] = nh
                    reached[u] = True
                    heapq.heappush(heap, (nt, nh, u))
    return (
        np.array(time, dtype=W.dtype),
        np.array(hops, dtype=np.int64),
        np.array(settled, dtype=np.uint8),
    )


def dijkstra_bucket(W, shape, source, stop=-1, allowed=None, maxw=-1):
    return dijkstra_heap(W, shape, source, stop, allowed)


def _l1_from(shape, idx):
    st = _strides(shape)
    grids = np.meshgrid(*(np.arange(s) for s in shape), indexing="ij")
    out = np.zeros(shape, dtype=np.int64)
    for i, g in enumerate(grids):
        out += np.abs(g - (idx // st[i]) % shape[i])
    return out


def restricted_dp(W, shape, source, K, zero_steps, keep_all=False, target=-1):
    shape = tuple(int(s) for s in shape)
    d = len(shape)
    n = math.prod(shape)
    if K < 0:
        raise ValueError("K must be >= 0")
    if not 0 <= source < n:
        raise ValueError("source outside window")
    Wd = W.reshape((d,) + shape)
    ds = _l1_from(shape, source)
    dt = _l1_from(shape, target) if target >= 0 else None
    val = np.zeros(shape, dtype=W.dtype)
    rch = np.zeros(shape, dtype=bool)
    flat_src = np.unravel_index(source, shape)
    rch[flat_src] = True
    trace_v = np.zeros(K + 1, dtype=W.dtype)
    trace_r = np.zeros(K + 1, dtype=np.uint8)
    tgt = np.unravel_index(target, shape) if target >= 0 else None
    if tgt is not None and target == source:
        trace_r[0] = 1
    if keep_all:
        all_v = np.zeros((K + 1, n), dtype=W.dtype)
        all_r = np.zeros((K + 1, n), dtype=np.uint8)
        all_r[0, source] = 1
    big = np.iinfo(np.int64).max if W.dtype == np.int64 else np.inf
    for j in range(1, K + 1):
        region = ds <= j
        if not zero_steps:
            region &= (ds + j) % 2 == 0
        if dt is not None:
            region &= dt <= K - j
        best = np.full(shape, big, dtype=W.dtype)
        have = np.zeros(shape, dtype=bool)
        if zero_steps:
            best = np.where(rch, val, best)
            have |= rch
        for i in range(d):
            lo = [slice(None)] * d
            hi = [slice(None)] * d
            lo[i] = slice(0, shape[i] - 1)
            hi[i] = slice(1, shape[i])
            lo, hi = tuple(lo), tuple(hi)
            w = Wd[i][lo]
            # arrive at hi-side vertex from its lower neighbour
            cand = val[lo] + w
            ok = rch[lo] & (~have[hi] | (cand < best[hi]))
            best[hi] = np.where(ok, cand, best[hi])
            have[hi] |= rch[lo]
            # arrive at lo-side vertex from its upper neighbour
            cand = val[hi] + w
            ok = rch[hi] & (~have[lo] | (cand < best[lo]))
            best[lo] = np.where(ok, cand, best[lo])
            have[lo] |= rch[hi]
        rch = have & region
        val = np.where(rch, best, 0).astype(W.dtype)
        if tgt is not None and rch[tgt]:
            trace_v[j] = val[tgt]
            trace_r[j] = 1
        if keep_all:
            all_v[j] = val.reshape(-1)
            all_r[j] = rch.reshape(-1)
    if keep_all:
        return all_v, all_r, trace_v, trace_r, K + 1
    return val.reshape(-1).copy(), rch.reshape(-1).astype(np.uint8), trace_v, trace_r, 2
