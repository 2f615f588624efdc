"""Kernel backend selection.

The compiled extension is used when it imports; ``FPPKIT_PURE_PYTHON=1``
forces the numpy/heapq fallback. ``BACKEND`` names the active one.
"""
import os

from . import _fallback

fallback = _fallback

if os.environ.get("FPPKIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback
        BACKEND = "python"

compiled = _impl if BACKEND == "cython" else None

dijkstra_heap = _impl.dijkstra_heap
dijkstra_bucket = _impl.dijkstra_bucket
restricted_dp = _impl.restricted_dp
