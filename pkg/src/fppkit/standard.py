"""Standard first-passage percolation on a window.

Passage times come from a Dijkstra relaxation on the ordered pair
(time, hop count), which yields the fewest-edge geodesic length for free.
The longest geodesic is found on the geodesic graph: edges of positive weight
are acyclic once oriented by passage time, and zero-weight edges form
clusters at a common passage time that are resolved through their
biconnected blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .distributions import to_fraction
from .errors import FppError, PreconditionError
from .lattice import Environment, l1, shift_environment, steps

__all__ = [
    "PassageField",
    "Geodesic",
    "GeodesicStats",
    "GeodesicGraph",
    "SandwichRecord",
    "ShrinkRecord",
    "passage_times",
    "min_length_geodesic",
    "geodesic_graph",
    "max_length_geodesic",
    "geodesic_stats",
    "shift_sandwich",
    "geodesic_shift_monotonicity",
    "DEFAULT_NODE_BUDGET",
    "FLOAT_RTOL",
]

DEFAULT_NODE_BUDGET = 10**6
FLOAT_RTOL = 1e-9
_BUCKET_MAX = 1 << 16


@dataclass(frozen=True, eq=False)
class PassageField:
    """Single-source passage times.

    Attributes:
        env: environment the field was computed on.
        source: source point.
        raw: kernel-unit times (int numerators in exact mode), flat index.
        hops: fewest edges among minimizing paths to each vertex.
        settled: vertices whose time is final; all of them unless the
            computation was stopped early.
    """

    env: Environment
    source: tuple
    raw: np.ndarray
    hops: np.ndarray
    settled: np.ndarray

    @property
    def complete(self) -> bool:
        return bool(self.settled.all())

    def time(self, x: Sequence[int]):
        i = self.env.window.index(x)
        if not self.settled[i]:
            raise PreconditionError(f"passage time to {tuple(x)} was not computed")
        return self.env.to_value(self.raw[i])

    def times(self) -> np.ndarray:
        """Passage times shaped like the window (Fractions in exact mode)."""
        shape = self.env.window.shape
        if self.env.exact:
            out = np.array([Fraction(int(v), self.env.denom) for v in self.raw], dtype=object)
            return out.reshape(shape)
        return self.raw.reshape(shape).copy()


@dataclass(frozen=True)
class Geodesic:
    vertices: tuple
    total_time: object

    @property
    def length(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class GeodesicStats:
    source: tuple
    target: tuple
    T: object
    L_min: int
    L_max: int | None = None
    exactness: str | None = None


@dataclass(frozen=True)
class SandwichRecord:
    lhs: object
    L_min_b: int
    L_max_b: int
    rhs: object
    exactness: str
    ok: bool


@dataclass(frozen=True)
class ShrinkRecord:
    L_max_b: int
    L_min_a: int
    exactness: str
    ok: bool


def _point(x, d) -> tuple:
    x = tuple(int(c) for c in x)
    if len(x) != d:
        raise PreconditionError(f"point {x} has dimension {len(x)}, expected {d}")
    return x


def _run_dijkstra(env: Environment, src: int, stop: int = -1):
    W = env.flat
    if env.exact:
        maxw = int(W.max()) if W.size else 0
        if maxw <= _BUCKET_MAX:
            return kernels.dijkstra_bucket(W, env.window.shape, src, stop, None, maxw)
    return kernels.dijkstra_heap(W, env.window.shape, src, stop)


def passage_times(env: Environment, source: Sequence[int], stop: Sequence[int] | None = None) -> PassageField:
    """Passage times from ``source`` to every vertex of the window.

    Paths are confined to the window. With ``stop`` the search halts once all
    vertices no farther than ``stop`` are final; the others are marked
    unsettled.

    Raises:
        NegativeWeightError: if the environment carries negative weights.
    """
    env.require_nonnegative()
    win = env.window
    source = _point(source, win.d)
    s = win.index(source)
    t = win.index(_point(stop, win.d)) if stop is not None else -1
    time, hops, settled = _run_dijkstra(env, s, t)
    settled = settled.astype(bool)
    for a in (time, hops, settled):
        a.setflags(write=False)
    return PassageField(env, source, time, hops, settled)


def _walk_tight(env: Environment, bwd: PassageField, source: tuple) -> list[tuple]:
    """Follow the first tight step (in step order) from ``source`` down ``bwd``."""
    win = env.window
    W = env.weights
    tb, hb = bwd.raw, bwd.hops
    u = win.index(source)
    path = [source]
    cur = source
    moves = steps(win.d)
    while hb[u] > 0:
        for z in moves:
            nxt = tuple(a + b for a, b in zip(cur, z))
            if not win.contains(nxt):
                continue
            v = win.index(nxt)
            if not bwd.settled[v]:
                continue
            axis = next(i for i in range(win.d) if z[i])
            w = W[axis, u] if z[axis] > 0 else W[axis, v]
            if hb[v] == hb[u] - 1 and tb[v] + w == tb[u]:
                break
        else:  # pragma: no cover - would mean a kernel bug
            raise FppError("geodesic extraction failed")
        u, cur = v, nxt
        path.append(cur)
    return path


def min_length_geodesic(env: Environment, source: Sequence[int], target: Sequence[int]):
    """The canonical fewest-edge geodesic from ``source`` to ``target``.

    Among geodesics of minimal edge count the first step is chosen in the
    order e1, -e1, e2, -e2, ... and so on at every vertex.

    Returns:
        (GeodesicStats with L_max unset, Geodesic)
    """
    d = env.d
    source, target = _point(source, d), _point(target, d)
    bwd = passage_times(env, target, stop=source)
    s = env.window.index(source)
    T = env.to_value(bwd.raw[s])
    path = _walk_tight(env, bwd, source)
    total = sum((env.weight(a, b) for a, b in zip(path, path[1:])), env.to_value(0))
    if env.exact and total != T:  # pragma: no cover
        raise FppError("geodesic weight does not match passage time")
    stats = GeodesicStats(source, target, T, int(bwd.hops[s]))
    return stats, Geodesic(tuple(path), T if env.exact else total)


# ---------------------------------------------------------------------------
# geodesic graph


def _blocks(vertices: list[int], adj: dict[int, list[int]]):
    """Biconnected blocks of a connected simple graph (iterative Tarjan).

    Returns a list of (vertex set, edge list) pairs.
    """
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    out = []
    counter = 0
    root = vertices[0]
    disc[root] = low[root] = counter
    stack = [(root, -1, iter(adj[root]))]
    estack: list[tuple[int, int]] = []
    while stack:
        u, parent, it = stack[-1]
        advanced = False
        for v in it:
            if v == parent:
                continue
            if v not in disc:
                counter += 1
                disc[v] = low[v] = counter
                estack.append((u, v))
                stack.append((v, u, iter(adj[v])))
                advanced = True
                break
            if disc[v] < disc[u]:
                estack.append((u, v))
                low[u] = min(low[u], disc[v])
        if advanced:
            continue
        stack.pop()
        if parent >= 0:
            low[parent] = min(low[parent], low[u])
            if low[u] >= disc[parent]:
                edges = []
                while True:
                    e = estack.pop()
                    edges.append(e)
                    if e == (parent, u):
                        break
                vs = set()
                for a, b in edges:
                    vs.add(a)
                    vs.add(b)
                out.append((vs, edges))
    return out


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0
        self.exhausted = False


def _block_longest(block_adj: dict[int, list[int]], start: int, budget: _Budget) -> dict[int, int]:
    """Longest simple path from ``start`` to every vertex of a block.

    Exhaustive depth-first search. Lengths are seeded with BFS distances so a
    truncated search still returns realizable (lower-bound) lengths.
    """
    best = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in block_adj[u]:
                if v not in best:
                    best[v] = best[u] + 1
                    nxt.append(v)
        frontier = nxt
    if len(block_adj) <= 2:
        return best
    on_path = {start}
    stack = [(start, iter(block_adj[start]))]
    while stack:
        u, it = stack[-1]
        for v in it:
            if v in on_path:
                continue
            budget.used += 1
            if budget.used > budget.limit:
                budget.exhausted = True
                return best
            depth = len(stack)
            if depth > best[v]:
                best[v] = depth
            on_path.add(v)
            stack.append((v, iter(block_adj[v])))
            break
        else:
            stack.pop()
            on_path.discard(u)
    return best


class _Cluster:
    """Connected set of vertices joined by zero-weight geodesic edges."""

    def __init__(self, vertices: list[int], edges: list[tuple[int, int]]):
        self.vertices = vertices
        adj: dict[int, list[int]] = {v: [] for v in vertices}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        self.blocks = _blocks(vertices, adj)
        self.block_adj = []
        self.vertex_blocks: dict[int, list[int]] = {v: [] for v in vertices}
        for bi, (vs, es) in enumerate(self.blocks):
            badj: dict[int, list[int]] = {v: [] for v in vs}
            for a, b in es:
                badj[a].append(b)
                badj[b].append(a)
            for v in badj:
                badj[v].sort()
            self.block_adj.append(badj)
            for v in vs:
                self.vertex_blocks[v].append(bi)
        self._memo: dict[tuple[int, int], dict[int, int]] = {}

    def longest_from(self, bi: int, start: int, budget: _Budget) -> dict[int, int]:
        key = (bi, start)
        if key not in self._memo:
            self._memo[key] = _block_longest(self.block_adj[bi], start, budget)
        return self._memo[key]

    def walk(self, entry: int):
        """Yield (block, via vertex, parent block) over the block tree from ``entry``."""
        stack = [(bi, entry, -1) for bi in self.vertex_blocks[entry]]
        order = []
        while stack:
            bi, via, parent = stack.pop()
            order.append((bi, via, parent))
            for v in self.blocks[bi][0]:
                if v == via:
                    continue
                for bj in self.vertex_blocks[v]:
                    if bj != bi:
                        stack.append((bj, v, bi))
        return order

    def usable_blocks(self, entries: set[int], exits: set[int]) -> set[int]:
        """Blocks crossed by some simple path from an entry to a distinct exit."""
        usable: set[int] = set()
        for a in entries:
            order = self.walk(a)
            # children are visited after parents in ``order``; reverse for post-order
            below: dict[tuple[int, int], bool] = {}
            for bi, via, parent in reversed(order):
                found = False
                for v in self.blocks[bi][0]:
                    if v == via:
                        continue
                    if v in exits:
                        found = True
                    for bj in self.vertex_blocks[v]:
                        if bj != bi and below.get((bj, v), False):
                            found = True
                below[(bi, via)] = found
                if found:
                    usable.add(bi)
        return usable


@dataclass(eq=False)
class GeodesicGraph:
    """Edges lying on at least one geodesic between two points.

    Attributes:
        T: passage time between the endpoints (raw kernel units).
        on: vertices lying on some geodesic.
        pos_edges: positive-weight geodesic edges (u, v) oriented by
            increasing passage time from the source.
        zero_edges: zero-weight geodesic edges.
    """

    env: Environment
    source: tuple
    target: tuple
    T: object
    on: np.ndarray
    fwd_raw: np.ndarray
    pos_edges: list = field(default_factory=list)
    zero_edges: list = field(default_factory=list)
    clusters: dict = field(default_factory=dict)
    cluster_of: dict = field(default_factory=dict)
    _zc: dict = field(default_factory=dict, repr=False)

    def edges(self) -> set:
        """Canonical (point, point) pairs of the geodesic edges."""
        win = self.env.window
        out = set()
        for a, b in list(self.pos_edges) + list(self.zero_edges):
            pa, pb = win.point(a), win.point(b)
            out.add((pa, pb) if pa < pb else (pb, pa))
        return out

    def __len__(self):
        return len(self.pos_edges) + len(self.zero_edges)


def _tight(env, lhs, T, tol):
    if env.exact:
        return lhs == T
    return np.abs(lhs - T) <= tol * max(1.0, abs(float(T)))


def geodesic_graph(
    field_fwd: PassageField, field_bwd: PassageField, target: Sequence[int], tol: float | None = None
) -> GeodesicGraph:
    """Union of the edges of all geodesics from ``field_fwd.source`` to ``target``.

    ``field_bwd`` must be the passage field from ``target`` on the same
    environment. An edge ``{u, v}`` is kept when
    ``T(s, u) + t(u, v) + T(v, x) = T(s, x)`` and, for zero-weight edges, some
    self-avoiding geodesic actually uses it. Exact in exact mode; float mode
    compares with relative tolerance ``tol`` (default ``FLOAT_RTOL``).
    """
    env = field_fwd.env
    if not (field_bwd.env is env or env.same_weights(field_bwd.env)):
        raise PreconditionError("passage fields come from different environments")
    target = _point(target, env.d)
    if field_bwd.source != target:
        raise PreconditionError(f"backward field is rooted at {field_bwd.source}, not {target}")
    if tol is None:
        tol = 0.0 if env.exact else FLOAT_RTOL
    win = env.window
    s, x = win.index(field_fwd.source), win.index(target)
    if not field_fwd.settled[x]:
        raise PreconditionError("forward field does not reach the target")
    T = field_fwd.raw[x]
    g = GeodesicGraph(env, field_fwd.source, target, T, np.zeros(win.size, bool), field_fwd.raw)
    if s == x:
        g.on[s] = True
        g.clusters = {s: [s]}
        g.cluster_of = {s: s}
        return g
    tf, tb = field_fwd.raw, field_bwd.raw
    ok = field_fwd.settled & field_bwd.settled
    on = ok & _tight(env, tf + tb, T, tol)
    g.on = on
    mask = win.edge_mask()
    st = win.strides
    pos, zero = [], []
    for i in range(win.d):
        u = np.nonzero(mask[i] & on)[0]
        v = u + st[i]
        keep = on[v]
        u, v = u[keep], v[keep]
        w = env.weights[i, u]
        fwd = _tight(env, tf[u] + w + tb[v], T, tol)
        bwd = _tight(env, tf[v] + w + tb[u], T, tol)
        z = w == 0
        for a, b in zip(u[(fwd | bwd) & z], v[(fwd | bwd) & z]):
            zero.append((int(a), int(b)))
        for a, b in zip(u[fwd & ~z], v[fwd & ~z]):
            pos.append((int(a), int(b)))
        for a, b in zip(u[bwd & ~z], v[bwd & ~z]):
            pos.append((int(b), int(a)))
    g.pos_edges = pos

    # zero-weight clusters
    verts = np.nonzero(on)[0]
    loc = {int(v): i for i, v in enumerate(verts)}
    n = len(verts)
    if zero:
        rows = [loc[a] for a, _ in zero]
        cols = [loc[b] for _, b in zero]
        graph = coo_matrix((np.ones(len(zero)), (rows, cols)), shape=(n, n))
        _, labels = connected_components(graph, directed=False)
    else:
        labels = np.arange(n)
    clusters: dict[int, list[int]] = {}
    for v in verts:
        clusters.setdefault(int(labels[loc[int(v)]]), []).append(int(v))
    g.clusters = clusters
    g.cluster_of = {int(v): int(labels[loc[int(v)]]) for v in verts}

    if zero:
        entries: dict[int, set] = {}
        exits: dict[int, set] = {}
        entries.setdefault(g.cluster_of[s], set()).add(s)
        exits.setdefault(g.cluster_of[x], set()).add(x)
        for a, b in pos:
            exits.setdefault(g.cluster_of[a], set()).add(a)
            entries.setdefault(g.cluster_of[b], set()).add(b)
        by_cluster: dict[int, list] = {}
        for a, b in zero:
            by_cluster.setdefault(g.cluster_of[a], []).append((a, b))
        kept = []
        for c, es in by_cluster.items():
            cl = _Cluster(clusters[c], es)
            g._zc[c] = cl
            use = cl.usable_blocks(entries.get(c, set()), exits.get(c, set()))
            for bi in sorted(use):
                kept.extend(cl.blocks[bi][1])
        g.zero_edges = [(min(a, b), max(a, b)) for a, b in kept]
    return g


def _longest(g: GeodesicGraph, budget: _Budget) -> int:
    env = g.env
    win = env.window
    s, x = win.index(g.source), win.index(g.target)
    if s == x:
        return 0
    incoming: dict[int, list[int]] = {}
    for a, b in g.pos_edges:
        incoming.setdefault(b, []).append(a)
    # clusters in order of passage time from the source
    order = sorted(g.clusters, key=lambda c: g.fwd_raw[g.clusters[c][0]])
    best: dict[int, int] = {}
    neg = -1
    for c in order:
        vs = g.clusters[c]
        inval = {}
        for v in vs:
            val = 0 if v == s else neg
            for u in incoming.get(v, ()):
                if best.get(u, neg) >= 0:
                    val = max(val, best[u] + 1)
            if val >= 0:
                inval[v] = val
        cl = g._zc.get(c)
        if cl is None or len(vs) == 1:
            for v, val in inval.items():
                best[v] = max(best.get(v, neg), val)
            continue
        for a, val in inval.items():
            best[a] = max(best.get(a, neg), val)
            acc_at = {(bi, a): val for bi in cl.vertex_blocks[a]}
            for bi, via, _ in cl.walk(a):
                acc = acc_at[(bi, via)]
                lp = cl.longest_from(bi, via, budget)
                for v, ln in lp.items():
                    if v == via:
                        continue
                    cand = acc + ln
                    if cand > best.get(v, neg):
                        best[v] = cand
                    for bj in cl.vertex_blocks[v]:
                        if bj != bi:
                            acc_at[(bj, v)] = cand
    return best[x]


def max_length_geodesic(
    env: Environment, source: Sequence[int], target: Sequence[int], node_budget: int = DEFAULT_NODE_BUDGET
) -> GeodesicStats:
    """Longest geodesic between two points.

    Exact unless the self-avoiding search inside zero-weight blocks spends
    more than ``node_budget`` expansions, in which case the best length found
    is returned with ``exactness="lower-bound"``.
    """
    return geodesic_stats(env, source, target, node_budget)


def geodesic_stats(
    env: Environment, source: Sequence[int], target: Sequence[int], node_budget: int = DEFAULT_NODE_BUDGET
) -> GeodesicStats:
    """(T, L_min, L_max, exactness) for one source/target pair."""
    d = env.d
    source, target = _point(source, d), _point(target, d)
    fwd = passage_times(env, source, stop=target)
    bwd = passage_times(env, target, stop=source)
    g = geodesic_graph(fwd, bwd, target)
    budget = _Budget(node_budget)
    lmax = _longest(g, budget)
    x = env.window.index(target)
    return GeodesicStats(
        source,
        target,
        env.to_value(fwd.raw[x]),
        int(fwd.hops[x]),
        lmax,
        "lower-bound" if budget.exhausted else "exact",
    )


# ---------------------------------------------------------------------------
# shift inequalities


def _shift_floor(env: Environment, total) -> None:
    r0 = env.dist.ess_inf
    if env.exact:
        ok = to_fraction(r0) + total >= 0
    else:
        ok = float(r0) + float(total) >= 0
    if not ok:
        raise PreconditionError(f"shift {total} is below -ess inf = {-r0}; weights could be negative")


def _as(env, v):
    return to_fraction(v) if env.exact else float(v)


def shift_sandwich(env: Environment, target, b, delta, eta, source=None, node_budget=DEFAULT_NODE_BUDGET) -> SandwichRecord:
    """Difference quotients of the shifted passage time around shift ``b``.

    Reports ``lhs = (T(b+eta) - T(b)) / eta``, the shortest and longest
    geodesic lengths at shift ``b`` and ``rhs = (T(b) - T(b-delta)) / delta``;
    ``lhs <= L_min <= L_max <= rhs`` must hold for every sample.
    """
    b, delta, eta = _as(env, b), _as(env, delta), _as(env, eta)
    if not (delta > 0 and eta > 0):
        raise PreconditionError("delta and eta must be > 0")
    _shift_floor(env, env.shift + b - delta)
    source = (0,) * env.d if source is None else source
    env_b = shift_environment(env, b)
    st = geodesic_stats(env_b, source, target, node_budget)
    t_hi = passage_times(shift_environment(env, b + eta), source, stop=target).time(target)
    t_lo = passage_times(shift_environment(env, b - delta), source, stop=target).time(target)
    lhs = (t_hi - st.T) / eta
    rhs = (st.T - t_lo) / delta
    ok = lhs <= st.L_min <= st.L_max <= rhs
    if env.exact and not ok:  # pragma: no cover - theorem-forced
        raise FppError(f"shift sandwich violated: {lhs} <= {st.L_min} <= {st.L_max} <= {rhs}")
    return SandwichRecord(lhs, st.L_min, st.L_max, rhs, st.exactness, bool(ok))


def geodesic_shift_monotonicity(env: Environment, target, a, b, source=None, node_budget=DEFAULT_NODE_BUDGET) -> ShrinkRecord:
    """Check that every geodesic at shift ``b`` is no longer than any at shift ``a < b``."""
    a, b = _as(env, a), _as(env, b)
    if not a < b:
        raise PreconditionError("need a < b")
    _shift_floor(env, env.shift + a)
    source = (0,) * env.d if source is None else source
    hi = geodesic_stats(shift_environment(env, b), source, target, node_budget)
    lo = passage_times(shift_environment(env, a), source, stop=target)
    l_min_a = int(lo.hops[env.window.index(_point(target, env.d))])
    ok = hi.L_max <= l_min_a
    if env.exact and hi.exactness == "exact" and not ok:  # pragma: no cover
        raise FppError(f"geodesic lengths grew under a larger shift: {hi.L_max} > {l_min_a}")
    return ShrinkRecord(hi.L_max, l_min_a, hi.exactness, bool(ok))
