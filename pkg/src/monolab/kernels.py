"""Backend selection for the hot grid/graph kernels.

The compiled extension is used when it imports; otherwise the numpy
versions take over.  Set ``MONOLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("MONOLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"


def _c2(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    return a if a.ndim == 2 else a.reshape(len(a), -1)


def _c1(a):
    return np.ascontiguousarray(a, dtype=np.float64).ravel()


def maxplus_lines(g, s, t):
    return np.asarray(_impl.maxplus_lines(np.ascontiguousarray(g, dtype=np.float64), _c1(s), _c1(t)))


def fitzpatrick_values(px, pxs, sx, sxs):
    return np.asarray(_impl.fitzpatrick_values(_c2(px), _c2(pxs), _c2(sx), _c2(sxs)))


def pairwise_min_gap(x, xs):
    best, i, j = _impl.pairwise_min_gap(_c2(x), _c2(xs))
    return float(best), int(i), int(j)


def directed_hausdorff(a, b):
    dist, i = _impl.directed_hausdorff(_c2(a), _c2(b))
    return float(dist), int(i)


def hausdorff(a, b):
    """Symmetric Hausdorff distance between two finite point sets (rows)."""
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def conjugate_bruteforce(qx, qxs, f, px, pxs):
    return np.asarray(_impl.conjugate_bruteforce(_c2(qx), _c2(qxs), _c1(f), _c2(px), _c2(pxs)))


def use_backend(name):
    """Switch backend at runtime ("cython" or "python"); returns the previous name."""
    global _impl, BACKEND
    previous = BACKEND
    if name == "python":
        _impl = _pykernels
    elif name == "cython":
        from . import _ckernels
        _impl = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    return previous
