# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shortest-path kernels on a window of Z^d.

Conventions shared with ``_fallback.py``:

* ``W`` is the flattened ``(d, N)`` weight array: ``W[i*N + v]`` is the weight
  of edge ``{v, v + stride[i]}``.
* ``shape`` is the window shape; vertices are flat C-order indices.
* Quantities that were never reached are reported through a separate mask,
  never through a large finite number.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, int32_t, uint8_t
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort

cnp.import_array()

ctypedef fused wt:
    int64_t
    double

cdef enum:
    MAXD = 8


cdef struct Geom:
    int d
    int64_t n
    int64_t shape[MAXD]
    int64_t stride[MAXD]


cdef Geom _geom(shape) except *:
    cdef Geom g
    cdef int i
    g.d = len(shape)
    if g.d > MAXD:
        raise ValueError("dimension too large")
    g.n = 1
    for i in range(g.d):
        g.shape[i] = shape[i]
        g.n *= shape[i]
    g.stride[g.d - 1] = 1
    for i in range(g.d - 2, -1, -1):
        g.stride[i] = g.stride[i + 1] * g.shape[i + 1]
    return g


# ---------------------------------------------------------------- binary heap
# Lazy-deletion min-heap on (time, hops, vertex).

cdef struct HeapItem:
    double t        # unused for int64 keys
    int64_t ti
    int64_t h
    int64_t v


cdef inline bint _item_less(HeapItem* a, HeapItem* b) noexcept nogil:
    if a.ti != b.ti:
        return a.ti < b.ti
    if a.t != b.t:
        return a.t < b.t
    if a.h != b.h:
        return a.h < b.h
    return a.v < b.v


cdef inline void _heap_push(vector[HeapItem]& heap, HeapItem item) noexcept nogil:
    heap.push_back(item)
    cdef size_t i = heap.size() - 1
    cdef size_t p
    cdef HeapItem tmp
    while i > 0:
        p = (i - 1) >> 1
        if _item_less(&heap[i], &heap[p]):
            tmp = heap[i]
            heap[i] = heap[p]
            heap[p] = tmp
            i = p
        else:
            break


cdef inline HeapItem _heap_pop(vector[HeapItem]& heap) noexcept nogil:
    cdef HeapItem top = heap[0]
    cdef HeapItem last = heap.back()
    heap.pop_back()
    cdef size_t n = heap.size()
    cdef size_t i = 0
    cdef size_t c
    if n == 0:
        return top
    heap[0] = last
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and _item_less(&heap[c + 1], &heap[c]):
            c += 1
        if _item_less(&heap[c], &heap[i]):
            last = heap[c]
            heap[c] = heap[i]
            heap[i] = last
            i = c
        else:
            break
    return top


cdef inline void _set_key(HeapItem* it, wt t) noexcept nogil:
    if wt is double:
        it.t = t
        it.ti = 0
    else:
        it.t = 0.0
        it.ti = t


def dijkstra_heap(const wt[::1] W, shape, int64_t source, int64_t stop=-1, const uint8_t[::1] allowed=None):
    """Lexicographic (time, hops) Dijkstra from ``source``.

    Returns ``(time, hops, settled)``. With ``stop >= 0`` the search ends once
    every vertex with time <= time[stop] is settled. ``allowed`` restricts the
    search to a vertex subset.
    """
    cdef Geom g = _geom(shape)
    cdef int64_t n = g.n
    if wt is double:
        time_arr = np.zeros(n, dtype=np.float64)
    else:
        time_arr = np.zeros(n, dtype=np.int64)
    hops_arr = np.zeros(n, dtype=np.int64)
    settled_arr = np.zeros(n, dtype=np.uint8)
    reached_arr = np.zeros(n, dtype=np.uint8)
    cdef wt[::1] tm = time_arr
    cdef int64_t[::1] hp = hops_arr
    cdef uint8_t[::1] st = settled_arr
    cdef uint8_t[::1] rc = reached_arr
    cdef bint use_mask = allowed is not None
    cdef vector[HeapItem] heap
    cdef HeapItem it
    cdef int64_t v, u, c, h, nh
    cdef int i, k
    cdef wt t, nt, w, stop_t = 0
    cdef bint stop_seen = False
    if source < 0 or source >= n:
        raise ValueError("source outside window")
    if use_mask and not allowed[source]:
        raise ValueError("source not in allowed region")
    with nogil:
        tm[source] = 0
        hp[source] = 0
        rc[source] = 1
        _set_key(&it, <wt>0)
        it.h = 0
        it.v = source
        _heap_push(heap, it)
        while heap.size() > 0:
            it = _heap_pop(heap)
            v = it.v
            if st[v]:
                continue
            t = tm[v]
            h = hp[v]
            if wt is double:
                if it.t != t or it.h != h:
                    continue
            else:
                if it.ti != t or it.h != h:
                    continue
            if stop_seen and t > stop_t:
                break
            st[v] = 1
            if v == stop:
                stop_seen = True
                stop_t = t
            for i in range(g.d):
                c = (v // g.stride[i]) % g.shape[i]
                for k in range(2):
                    if k == 0:
                        if c + 1 >= g.shape[i]:
                            continue
                        u = v + g.stride[i]
                        w = W[i * n + v]
                    else:
                        if c == 0:
                            continue
                        u = v - g.stride[i]
                        w = W[i * n + u]
                    if st[u] or (use_mask and not allowed[u]):
                        continue
                    nt = t + w
                    nh = h + 1
                    if (not rc[u]) or nt < tm[u] or (nt == tm[u] and nh < hp[u]):
                        tm[u] = nt
                        hp[u] = nh
                        rc[u] = 1
                        _set_key(&it, nt)
                        it.h = nh
                        it.v = u
                        _heap_push(heap, it)
    return time_arr, hops_arr, settled_arr


def dijkstra_bucket(const int64_t[::1] W, shape, int64_t source, int64_t stop=-1,
                    const uint8_t[::1] allowed=None, int64_t maxw=-1):
    """Same contract as :func:`dijkstra_heap` for small nonnegative integer weights.

    Circular bucket queue over time; inside one bucket vertices are processed
    in increasing hop count by merging the bucket (sorted) with a FIFO of
    zero-weight relaxations.
    """
    cdef Geom g = _geom(shape)
    cdef int64_t n = g.n
    time_arr = np.zeros(n, dtype=np.int64)
    hops_arr = np.zeros(n, dtype=np.int64)
    settled_arr = np.zeros(n, dtype=np.uint8)
    reached_arr = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] tm = time_arr
    cdef int64_t[::1] hp = hops_arr
    cdef uint8_t[::1] st = settled_arr
    cdef uint8_t[::1] rc = reached_arr
    cdef bint use_mask = allowed is not None
    if maxw < 0:
        maxw = max(int(np.max(W)) if W.shape[0] else 0, 0)
    cdef int64_t nb = maxw + 1
    cdef vector[vector[pair[int64_t, int64_t]]] buckets
    buckets.resize(nb)
    cdef vector[pair[int64_t, int64_t]] cur
    cdef vector[pair[int64_t, int64_t]] fifo
    cdef size_t ci, fi
    cdef int64_t pending = 0
    cdef int64_t t = 0, v, u, h, nh, c, w, nt
    cdef int i, k
    cdef bint stop_seen = False
    cdef bint take_cur
    if source < 0 or source >= n:
        raise ValueError("source outside window")
    with nogil:
        rc[source] = 1
        buckets[0].push_back(pair[int64_t, int64_t](0, source))
        pending = 1
        while pending > 0:
            cur.swap(buckets[t % nb])
            buckets[t % nb].clear()
            pending -= cur.size()
            sort(cur.begin(), cur.end())
            fifo.clear()
            ci = 0
            fi = 0
            while ci < cur.size() or fi < fifo.size():
                if ci < cur.size() and fi < fifo.size():
                    take_cur = cur[ci].first <= fifo[fi].first
                else:
                    take_cur = ci < cur.size()
                if take_cur:
                    h = cur[ci].first
                    v = cur[ci].second
                    ci += 1
                else:
                    h = fifo[fi].first
                    v = fifo[fi].second
                    fi += 1
                if st[v] or tm[v] != t or hp[v] != h:
                    continue
                st[v] = 1
                if v == stop:
                    stop_seen = True
                for i in range(g.d):
                    c = (v // g.stride[i]) % g.shape[i]
                    for k in range(2):
                        if k == 0:
                            if c + 1 >= g.shape[i]:
                                continue
                            u = v + g.stride[i]
                            w = W[i * n + v]
                        else:
                            if c == 0:
                                continue
                            u = v - g.stride[i]
                            w = W[i * n + u]
                        if st[u] or (use_mask and not allowed[u]):
                            continue
                        nt = t + w
                        nh = h + 1
                        if (not rc[u]) or nt < tm[u] or (nt == tm[u] and nh < hp[u]):
                            tm[u] = nt
                            hp[u] = nh
                            rc[u] = 1
                            if w == 0:
                                fifo.push_back(pair[int64_t, int64_t](nh, u))
                            else:
                                buckets[nt % nb].push_back(pair[int64_t, int64_t](nh, u))
                                pending += 1
            cur.clear()
            if stop_seen:
                break
            t += 1
    return time_arr, hops_arr, settled_arr


# ------------------------------------------------------- hop-restricted DP

def restricted_dp(const wt[::1] W, shape, int64_t source, int K, bint zero_steps,
                  bint keep_all=False, int64_t target=-1):
    """Layered Bellman recursion over exactly-k-step paths, k = 0..K.

    ``zero_steps`` adds the weight-free zero step (the G° recursion).
    With ``target >= 0`` each layer j is restricted to vertices v with
    |v - source|_1 <= j and |target - v|_1 <= K - j, which leaves every value
    at ``target`` unchanged.

    Returns ``(vals, reached, trace_vals, trace_reached, layers_held)``.
    With ``keep_all`` the first two are (K+1, N) arrays of every layer,
    otherwise they hold only layer K and at most two layers are ever live.
    The traces are the values at ``target`` for k = 0..K.
    """
    cdef Geom g = _geom(shape)
    cdef int64_t n = g.n
    cdef int d = g.d
    dtype = np.float64 if wt is double else np.int64
    if K < 0:
        raise ValueError("K must be >= 0")
    if source < 0 or source >= n:
        raise ValueError("source outside window")
    buf_a = np.zeros(n, dtype=dtype)
    buf_b = np.zeros(n, dtype=dtype)
    stamp_a = np.full(n, -1, dtype=np.int32)
    stamp_b = np.full(n, -1, dtype=np.int32)
    cdef wt[::1] prev = buf_a
    cdef wt[::1] cur = buf_b
    cdef int32_t[::1] pst = stamp_a
    cdef int32_t[::1] cst = stamp_b
    cdef wt[::1] tmpv
    cdef int32_t[::1] tmps
    trace_v = np.zeros(K + 1, dtype=dtype)
    trace_r = np.zeros(K + 1, dtype=np.uint8)
    cdef wt[::1] tv = trace_v
    cdef uint8_t[::1] tr = trace_r
    if keep_all:
        all_v = np.zeros((K + 1, n), dtype=dtype)
        all_r = np.zeros((K + 1, n), dtype=np.uint8)
    cdef wt[:, ::1] av
    cdef uint8_t[:, ::1] ar
    if keep_all:
        av = all_v
        ar = all_r

    cdef int64_t sc[MAXD]
    cdef int64_t xc[MAXD]
    cdef int64_t blo[MAXD]
    cdef int64_t bhi[MAXD]
    cdef int64_t cc[MAXD]
    cdef int64_t rem_t, rem1, rem2, a1, a2, lo, hi, base, v, u, cl, dl
    cdef int i, j, last = d - 1
    cdef bint empty, have, use_target = target >= 0
    cdef wt best, cand
    for i in range(d):
        sc[i] = (source // g.stride[i]) % g.shape[i]
        xc[i] = (target // g.stride[i]) % g.shape[i] if use_target else 0

    prev[source] = 0
    pst[source] = 0
    if use_target and target == source:
        tv[0] = 0
        tr[0] = 1
    if keep_all:
        av[0, source] = 0
        ar[0, source] = 1

    with nogil:
        for j in range(1, K + 1):
            rem_t = K - j
            empty = False
            for i in range(d):
                blo[i] = sc[i] - j
                bhi[i] = sc[i] + j
                if use_target:
                    if xc[i] - rem_t > blo[i]:
                        blo[i] = xc[i] - rem_t
                    if xc[i] + rem_t < bhi[i]:
                        bhi[i] = xc[i] + rem_t
                if blo[i] < 0:
                    blo[i] = 0
                if bhi[i] > g.shape[i] - 1:
                    bhi[i] = g.shape[i] - 1
                if blo[i] > bhi[i]:
                    empty = True
            if not empty:
                for i in range(d):
                    cc[i] = blo[i]
                while True:
                    a1 = 0
                    a2 = 0
                    base = 0
                    for i in range(last):
                        a1 += cc[i] - sc[i] if cc[i] >= sc[i] else sc[i] - cc[i]
                        a2 += cc[i] - xc[i] if cc[i] >= xc[i] else xc[i] - cc[i]
                        base += cc[i] * g.stride[i]
                    rem1 = j - a1
                    rem2 = rem_t - a2
                    if rem1 >= 0 and (not use_target or rem2 >= 0):
                        lo = sc[last] - rem1
                        hi = sc[last] + rem1
                        if use_target:
                            if xc[last] - rem2 > lo:
                                lo = xc[last] - rem2
                            if xc[last] + rem2 < hi:
                                hi = xc[last] + rem2
                        if lo < blo[last]:
                            lo = blo[last]
                        if hi > bhi[last]:
                            hi = bhi[last]
                        cl = lo
                        while cl <= hi:
                            dl = cl - sc[last] if cl >= sc[last] else sc[last] - cl
                            if not zero_steps and (a1 + dl + j) % 2 != 0:
                                cl += 1
                                continue
                            v = base + cl
                            have = False
                            best = 0
                            if zero_steps and pst[v] == j - 1:
                                best = prev[v]
                                have = True
                            for i in range(d):
                                if i == last:
                                    dl = cl
                                else:
                                    dl = cc[i]
                                if dl + 1 < g.shape[i]:
                                    u = v + g.stride[i]
                                    if pst[u] == j - 1:
                                        cand = prev[u] + W[i * n + v]
                                        if not have or cand < best:
                                            best = cand
                                            have = True
                                if dl > 0:
                                    u = v - g.stride[i]
                                    if pst[u] == j - 1:
                                        cand = prev[u] + W[i * n + u]
                                        if not have or cand < best:
                                            best = cand
                                            have = True
                            if have:
                                cur[v] = best
                                cst[v] = j
                                if keep_all:
                                    av[j, v] = best
                                    ar[j, v] = 1
                            cl += 1 if zero_steps else 2
                    # odometer over axes 0..d-2
                    i = last - 1
                    while i >= 0:
                        cc[i] += 1
                        if cc[i] <= bhi[i]:
                            break
                        cc[i] = blo[i]
                        i -= 1
                    if i < 0:
                        break
            if use_target and cst[target] == j:
                tv[j] = cur[target]
                tr[j] = 1
            tmpv = prev
            prev = cur
            cur = tmpv
            tmps = pst
            pst = cst
            cst = tmps

    final_v = np.asarray(prev).copy()
    final_r = (np.asarray(pst) == K).astype(np.uint8)
    final_v[final_r == 0] = 0
    if keep_all:
        return all_v, all_r, trace_v, trace_r, K + 1
    return final_v, final_r, trace_v, trace_r, 2
