"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

Signatures and return conventions match the compiled module exactly.
Work is chunked so temporaries stay around 32 MB.
"""
import numpy as np

_CHUNK_ELEMS = 4_000_000


def _rows_per_chunk(width):
    return max(1, _CHUNK_ELEMS // max(1, width))


def maxplus_lines(g, s, t):
    g = np.asarray(g, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    M, J = g.shape
    K = t.shape[0]
    out = np.empty((M, K))
    ts = np.multiply.outer(t, s)  # (K, J)
    step = _rows_per_chunk(K * J)
    for lo in range(0, M, step):
        block = g[lo:lo + step, None, :] + ts[None, :, :]
        out[lo:lo + step] = block.max(axis=2)
    return out


def fitzpatrick_values(px, pxs, sx, sxs):
    px, pxs, sx, sxs = (np.asarray(a, dtype=np.float64) for a in (px, pxs, sx, sxs))
    c = np.einsum("ij,ij->i", sxs, sx)
    out = np.empty(px.shape[0])
    step = _rows_per_chunk(sx.shape[0])
    for lo in range(0, px.shape[0], step):
        vals = px[lo:lo + step] @ sxs.T + pxs[lo:lo + step] @ sx.T - c
        out[lo:lo + step] = vals.max(axis=1)
    return out


def pairwise_min_gap(x, xs):
    x = np.asarray(x, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    m = x.shape[0]
    if m < 2:
        return np.inf, -1, -1
    # <xs_j - xs_i, x_j - x_i> = a_i + a_j - <xs_i, x_j> - <xs_j, x_i>
    a = np.einsum("ij,ij->i", xs, x)
    cross = xs @ x.T
    gaps = a[:, None] + a[None, :] - cross - cross.T
    iu = np.triu_indices(m, k=1)
    vals = gaps[iu]
    k = int(np.argmin(vals))
    i, j = int(iu[0][k]), int(iu[1][k])
    # recompute the winner directly to avoid cancellation in the expanded form
    best = float(np.dot(xs[j] - xs[i], x[j] - x[i]))
    return best, i, j


def directed_hausdorff(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] == 0:
        return 0.0, -1
    if b.shape[0] == 0:
        return np.inf, 0
    near = np.empty(a.shape[0])
    step = _rows_per_chunk(b.shape[0])
    for lo in range(0, a.shape[0], step):
        diff = a[lo:lo + step, None, :] - b[None, :, :]
        near[lo:lo + step] = np.einsum("ijk,ijk->ij", diff, diff).min(axis=1)
    i = int(np.argmax(near))
    return float(np.sqrt(near[i])), i


def conjugate_bruteforce(qx, qxs, f, px, pxs):
    qx, qxs, f, px, pxs = (np.asarray(v, dtype=np.float64) for v in (qx, qxs, f, px, pxs))
    keep = np.isfinite(f)
    qx, qxs, f = qx[keep], qxs[keep], f[keep]
    out = np.empty(px.shape[0])
    if qx.shape[0] == 0:
        out.fill(-np.inf)
        return out
    step = _rows_per_chunk(qx.shape[0])
    for lo in range(0, px.shape[0], step):
        vals = pxs[lo:lo + step] @ qx.T + px[lo:lo + step] @ qxs.T - f
        out[lo:lo + step] = vals.max(axis=1)
    return out
