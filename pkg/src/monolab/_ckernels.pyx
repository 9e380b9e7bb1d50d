# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid and graph kernels.

Every function here has a numpy twin in ``_pykernels`` with an identical
signature; ``monolab.kernels`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()


def maxplus_lines(const double[:, ::1] g, const double[::1] s, const double[::1] t):
    """out[m, k] = max_j (t[k] * s[j] + g[m, j]); -inf entries of g are skipped."""
    cdef Py_ssize_t M = g.shape[0], J = g.shape[1], K = t.shape[0]
    cdef Py_ssize_t m, j, k
    cdef double best, v, tk
    out = np.empty((M, K), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for m in range(M):
            for k in range(K):
                tk = t[k]
                best = -INFINITY
                for j in range(J):
                    if g[m, j] == -INFINITY:
                        continue
                    v = tk * s[j] + g[m, j]
                    if v > best:
                        best = v
                o[m, k] = best
    return out


def fitzpatrick_values(const double[:, ::1] px, const double[:, ::1] pxs,
                       const double[:, ::1] sx, const double[:, ::1] sxs):
    """Fitzpatrick function of the graph sample (sx, sxs) at each point (px, pxs)."""
    cdef Py_ssize_t G = px.shape[0], S = sx.shape[0], d = px.shape[1]
    cdef Py_ssize_t g, i, a
    cdef double best, v
    cdef double[::1] c = np.empty(S, dtype=np.float64)
    out = np.empty(G, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(S):
            v = 0.0
            for a in range(d):
                v = v + sxs[i, a] * sx[i, a]
            c[i] = v
        for g in range(G):
            best = -INFINITY
            for i in range(S):
                v = -c[i]
                for a in range(d):
                    v = v + sxs[i, a] * px[g, a] + pxs[g, a] * sx[i, a]
                if v > best:
                    best = v
            o[g] = best
    return out


def pairwise_min_gap(const double[:, ::1] x, const double[:, ::1] xs):
    """Smallest <xs_j - xs_i, x_j - x_i> over i < j, with its index pair.

    Returns (inf, -1, -1) for fewer than two points.
    """
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j, a, bi = -1, bj = -1
    cdef double best = INFINITY, v
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                v = 0.0
                for a in range(d):
                    v = v + (xs[j, a] - xs[i, a]) * (x[j, a] - x[i, a])
                if v < best:
                    best = v
                    bi = i
                    bj = j
    return best, bi, bj


def directed_hausdorff(const double[:, ::1] a, const double[:, ::1] b):
    """max_i min_j |a_i - b_j| and the index i attaining it."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, k, worst_i = -1
    cdef double worst = -1.0, near, v, diff
    if na == 0:
        return 0.0, -1
    if nb == 0:
        return INFINITY, 0
    with nogil:
        for i in range(na):
            near = INFINITY
            for j in range(nb):
                v = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    v = v + diff * diff
                    if v >= near:
                        break
                if v < near:
                    near = v
                    # near only shrinks from here; it cannot beat the current worst
                    if near <= worst:
                        break
            if near > worst:
                worst = near
                worst_i = i
    return sqrt(worst), worst_i


def conjugate_bruteforce(const double[:, ::1] qx, const double[:, ::1] qxs,
                         const double[::1] f,
                         const double[:, ::1] px, const double[:, ::1] pxs):
    """max over sources q of <px*, qx> + <qx*, px> - f(q), for every target p."""
    cdef Py_ssize_t Q = qx.shape[0], P = px.shape[0], d = qx.shape[1]
    cdef Py_ssize_t p, q, a
    cdef double best, v
    out = np.empty(P, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for p in range(P):
            best = -INFINITY
            for q in range(Q):
                if f[q] == INFINITY:
                    continue
                v = -f[q]
                for a in range(d):
                    v = v + pxs[p, a] * qx[q, a] + qxs[q, a] * px[p, a]
                if v > best:
                    best = v
            o[p] = best
    return out
