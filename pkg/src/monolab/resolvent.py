"""Resolvents (I + lam T)^-1 and Yosida regularizations.

Every solve is batched over rows of a ``(k, d)`` array.  The solver picks
the cheapest exact route available:

* affine operators (``T z = M z + c``) are a single linear solve;
* atomic operators with a closed-form prox or projection use it directly;
* sums are split into an affine part, Lipschitz single-valued parts and at
  most one set-valued part.  A normal cone of an affine subspace reduces the
  problem to the subspace; any other set-valued part is absorbed by the
  substitution ``z = J(u)`` which leaves a strongly monotone equation in
  ``u``;
* the remaining strongly monotone equation is solved by a safeguarded
  Illinois bracket in one dimension and by ``scipy.optimize.root`` with a
  damped-Picard fallback otherwise.

Each report carries a certified bound on the distance to the exact solution
rather than an equation residual: all reduced equations are 1-strongly
monotone, so ``|G(u)|`` bounds ``|u - u*|``, as does a bracket width.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import NoConvergence, NotResolvable
from .operators import (DEFAULT_TOL, AdjointComposition, ConvexFnSpec, GraphNormalCone, IndicatorOf,
                        Linear, NormalCone, OperatorSpec, ProductLift, Subdifferential, SumOf,
                        ToleranceConfig, Yosida, Zero, as_vector)

PICARD_MAX_ITER = 10**6


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: np.ndarray
    residual: float
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class BatchReport:
    """Row-wise solutions of a batched solve; ``residual[i]`` bounds the error of row i."""

    solution: np.ndarray
    residual: np.ndarray
    iterations: int
    converged: np.ndarray

    def row(self, i: int) -> SolveReport:
        return SolveReport(self.solution[i].copy(), float(self.residual[i]), self.iterations,
                           bool(self.converged[i]))


def _check_lam(lam) -> float:
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"resolvent parameter must be > 0, got {lam!r}")
    return lam


def _as_batch(W, dim) -> np.ndarray:
    W = np.array(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[None, :]
    if W.ndim != 2 or W.shape[1] != dim:
        from .errors import DimensionError

        raise DimensionError(f"expected points of dimension {dim}, got shape {W.shape}")
    return W


def _orthonormal(B: np.ndarray) -> np.ndarray:
    if B.shape[1] == 0:
        return B
    u, s, _ = np.linalg.svd(B, full_matrices=False)
    return u[:, s > 1e-12 * max(1.0, s.max())]


# ------------------------------------------------------- structural queries


def _flatten(spec: OperatorSpec) -> list:
    if isinstance(spec, SumOf):
        return [q for p in spec.parts for q in _flatten(p)]
    return [spec]


def affine_form(spec: OperatorSpec):
    """(M, c) with T z = M z + c for every z, or None."""
    d = spec.dim
    if isinstance(spec, Zero):
        return np.zeros((d, d)), np.zeros(d)
    if isinstance(spec, Linear):
        return spec.matrix, np.zeros(d)
    if isinstance(spec, Subdifferential):
        return spec.fn.affine_gradient()
    if isinstance(spec, Yosida):
        inner = affine_form(spec.inner)
        if inner is not None:
            M, c = inner
            H = np.eye(d) + spec.lam * M
            return np.linalg.solve(H, M), np.linalg.solve(H, c)
        sub = subspace_constraint(spec.inner)
        if sub is not None:
            B, z0 = sub
            P = np.eye(d) - B @ B.T
            return P / spec.lam, -(P @ z0) / spec.lam
        return None
    if isinstance(spec, AdjointComposition):
        inner = affine_form(spec.inner)
        if inner is None:
            return None
        M, c = inner
        return spec.A.T @ M @ spec.A, spec.A.T @ c
    if isinstance(spec, ProductLift):
        inner = affine_form(spec.inner)
        if inner is None:
            return None
        M, c = inner
        out = np.zeros((d, d))
        out[spec.dim_y:, spec.dim_y:] = M
        return out, np.concatenate([np.zeros(spec.dim_y), c])
    if isinstance(spec, SumOf):
        forms = [affine_form(p) for p in spec.parts]
        if any(f is None for f in forms):
            return None
        return sum(f[0] for f in forms), sum(f[1] for f in forms)
    return None


def subspace_constraint(spec: OperatorSpec):
    """(B, z0) with orthonormal B when spec is the normal cone of {B y + z0}, or None."""
    if isinstance(spec, NormalCone):
        s = spec.set
    elif isinstance(spec, Subdifferential) and isinstance(spec.fn, IndicatorOf):
        s = spec.fn.set
    elif isinstance(spec, GraphNormalCone):
        s = spec.set
    elif isinstance(spec, ProductLift):
        inner = subspace_constraint(spec.inner)
        if inner is None:
            return None
        Bx, zx = inner
        dy = spec.dim_y
        B = np.zeros((spec.dim, dy + Bx.shape[1]))
        B[:dy, :dy] = np.eye(dy)
        B[dy:, dy:] = Bx
        return B, np.concatenate([np.zeros(dy), zx])
    else:
        return None
    basis = s.affine_basis()
    if basis is None:
        return None
    B, z0 = basis
    B = _orthonormal(np.asarray(B, dtype=float))
    z0 = np.asarray(z0, dtype=float)
    return B, z0 - B @ (B.T @ z0)


def single_valued(spec: OperatorSpec):
    """(F, L): a batched evaluator of a single-valued L-Lipschitz monotone spec, or None."""
    form = affine_form(spec)
    if form is not None:
        M, c = form
        return (lambda Z: Z @ M.T + c), float(np.linalg.norm(M, 2))
    if isinstance(spec, Yosida):
        if not is_resolvable(spec.inner):
            return None
        return yosida_evaluator(spec.inner, spec.lam), 1.0 / spec.lam
    if isinstance(spec, AdjointComposition):
        sv = single_valued(spec.inner)
        if sv is None:
            return None
        F, L = sv
        A = spec.A
        return (lambda Y: F(Y @ A.T) @ A), L * float(np.linalg.norm(A, 2)) ** 2
    if isinstance(spec, ProductLift):
        sv = single_valued(spec.inner)
        if sv is None:
            return None
        F, L = sv
        dy = spec.dim_y
        return (lambda Z: np.hstack([np.zeros((Z.shape[0], dy)), F(Z[:, dy:])])), L
    if isinstance(spec, SumOf):
        parts = [single_valued(p) for p in spec.parts]
        if any(p is None for p in parts):
            return None
        Fs = [p[0] for p in parts]
        return (lambda Z: sum(F(Z) for F in Fs)), sum(p[1] for p in parts)
    return None


def direct_resolvent(spec: OperatorSpec):
    """Closed-form resolvent ``R(W, lam)`` for atomic set-valued specs, or None."""
    if isinstance(spec, Subdifferential):
        fn: ConvexFnSpec = spec.fn
        return fn.prox
    if isinstance(spec, NormalCone):
        return lambda W, lam: spec.set.project(W)
    if isinstance(spec, GraphNormalCone):
        return lambda W, lam: spec.set.project(W)
    if isinstance(spec, ProductLift):
        inner = direct_resolvent(spec.inner)
        if inner is None:
            return None
        dy = spec.dim_y
        return lambda W, lam: np.hstack([W[:, :dy], inner(W[:, dy:], lam)])
    if isinstance(spec, Yosida):
        inner = direct_resolvent(spec.inner)
        if inner is None:
            return None
        mu = spec.lam
        # resolvent of a Yosida regularization: a convex combination of w and J_(lam+mu) w
        return lambda W, lam: (mu * W + lam * inner(W, lam + mu)) / (lam + mu)
    return None


def is_resolvable(spec: OperatorSpec) -> bool:
    try:
        _plan(spec)
    except NotResolvable:
        return False
    return True


@dataclass(frozen=True)
class _Plan:
    affine: tuple | None  # (M, c) of all affine parts together
    nonlinear: tuple  # ((F, L), ...)
    subspace: tuple | None  # (B, z0)
    prox: object | None  # R(W, lam)
    dim: int
    atomic: object | None = None  # closed-form resolvent of the whole (non-affine) spec


_PLANS: "weakref.WeakKeyDictionary[OperatorSpec, _Plan]" = weakref.WeakKeyDictionary()


def _plan(spec: OperatorSpec) -> _Plan:
    plan = _PLANS.get(spec)
    if plan is None:
        plan = _PLANS[spec] = _build_plan(spec)
    return plan


def _build_plan(spec: OperatorSpec) -> _Plan:
    d = spec.dim
    M, c = np.zeros((d, d)), np.zeros(d)
    nonlinear, subspace, prox = [], None, None
    set_valued = 0
    for part in _flatten(spec):
        form = affine_form(part)
        if form is not None:
            M, c = M + form[0], c + form[1]
            continue
        sub = subspace_constraint(part)
        if sub is not None:
            subspace = sub
            set_valued += 1
            continue
        sv = single_valued(part)
        if sv is not None:
            nonlinear.append(sv)
            continue
        direct = direct_resolvent(part)
        if direct is not None:
            prox = direct
            set_valued += 1
            continue
        raise NotResolvable(f"{type(part).__name__} has no resolvent in this package")
    if set_valued > 1:
        raise NotResolvable("sums with more than one set-valued summand are not resolved")
    atomic = None
    if not isinstance(spec, SumOf) and affine_form(spec) is None:
        atomic = direct_resolvent(spec)
    return _Plan((M, c), tuple(nonlinear), subspace, prox, d, atomic)


# ------------------------------------------------------------- core solvers


def _bracket_solve(G, u0, m, eps, max_iter=400):
    """Roots of k independent increasing scalar maps with slope >= m.

    ``G(u, rows)`` evaluates the maps of the given rows at the (len(rows),)
    array u.  Secant steps on the two latest iterates are kept when they fall
    inside the bracket, which is exact on a linear piece; every fifth step
    bisects.  Returns (u, err, iterations) with ``err`` bounding |u - u*| by
    a bracket width or by |G(u)|/m.
    """
    k = u0.size
    eps = np.broadcast_to(eps, (k,))
    allrows = np.arange(k)
    g0 = G(u0, allrows)
    far = u0 - g0 / m
    gfar = G(far, allrows)
    pos = g0 > 0
    lo, hi = np.where(pos, far, u0), np.where(pos, u0, far)
    glo, ghi = np.where(pos, gfar, g0), np.where(pos, g0, gfar)
    best = np.where(np.abs(g0) <= np.abs(gfar), u0, far)
    err = np.minimum(np.abs(hi - lo), np.minimum(np.abs(g0), np.abs(gfar)) / m)
    # rounding can put a bracket end on the wrong side; then that end is the root to rounding
    bad_lo, bad_hi = glo > 0, ghi < 0
    best = np.where(bad_lo, lo, np.where(bad_hi, hi, best))
    err = np.where(bad_lo, glo / m, np.where(bad_hi, -ghi / m, err))
    prev, gprev, cur, gcur = far.copy(), gfar.copy(), u0.copy(), g0.copy()
    idx = np.flatnonzero((err > eps) & ~bad_lo & ~bad_hi & (g0 != 0))
    it = 0
    while idx.size and it < max_iter:
        it += 1
        l, h = lo[idx], hi[idx]
        if it % 5:
            with np.errstate(invalid="ignore", divide="ignore"):
                c = cur[idx] - gcur[idx] * (cur[idx] - prev[idx]) / (gcur[idx] - gprev[idx])
            c = np.where((c > l) & (c < h), c, 0.5 * (l + h))
        else:
            c = 0.5 * (l + h)
        gc = G(c, idx)
        left, right = gc < 0, gc > 0
        lo[idx] = np.where(left, c, l)
        hi[idx] = np.where(right, c, h)
        prev[idx], gprev[idx] = cur[idx], gcur[idx]
        cur[idx], gcur[idx] = c, gc
        best[idx] = c
        e = np.where(gc == 0, 0.0, np.minimum(hi[idx] - lo[idx], np.abs(gc) / m))
        err[idx] = e
        keep = (e > eps[idx]) & (np.nextafter(lo[idx], hi[idx]) < hi[idx])
        idx = idx[keep]
    return best, err, it


def _tolerance(W, eps):
    # absolute below unit scale, relative above it (double precision cannot do better)
    return eps * np.maximum(1.0, np.max(np.abs(W), axis=1))


def _root_rows(G, V0, eps_rows):
    """scipy root per row for a map G acting on (k, r) arrays; returns (V, |G(V)|)."""
    V = V0.copy()
    for i in range(V.shape[0]):
        sol = optimize.root(lambda v: G(v[None, :], rows=[i])[0], V0[i], method="hybr",
                            options={"xtol": 1e-15})
        if np.all(np.isfinite(sol.x)):
            V[i] = sol.x
    return V, np.linalg.norm(G(V), axis=1)


def _picard(G, V0, m, L, eps_rows, max_iter):
    """Damped Picard v <- v - (m/L^2) G(v); contraction sqrt(1 - m^2/L^2)."""
    step = m / L**2
    V = V0.copy()
    res = np.linalg.norm(G(V), axis=1)
    it = 0
    while np.any(res / m > eps_rows) and it < max_iter:
        it += 1
        V = V - step * G(V)
        res = np.linalg.norm(G(V), axis=1)
    return V, res / m, it


def strongly_monotone_solve(F, m: float, L: float, w0, tol: ToleranceConfig = DEFAULT_TOL,
                            max_iter: int = PICARD_MAX_ITER) -> SolveReport:
    """Zero of an m-strongly monotone, L-Lipschitz field F by damped Picard iteration.

    ``F`` maps a vector to a vector.  Raises NoConvergence, carrying the best
    iterate, when the cap is reached.
    """
    if not (m > 0 and L >= m):
        raise ValueError("need 0 < m <= L")
    w0 = as_vector(w0)
    step = m / L**2
    z = w0.copy()
    r = np.asarray(F(z), dtype=float)
    best, best_res = z, float(np.linalg.norm(r))
    it = 0
    while best_res > tol.eps_res and it < max_iter:
        it += 1
        z = z - step * r
        r = np.asarray(F(z), dtype=float)
        res = float(np.linalg.norm(r))
        if res < best_res:
            best, best_res = z, res
    report = SolveReport(best.copy(), best_res, it, best_res <= tol.eps_res)
    if not report.converged:
        raise NoConvergence(f"Picard iteration stopped at residual {best_res:.3g} after {it} steps", report)
    return report


def _solve_equation(G, V0, m, L, eps_rows, monotone: bool):
    """Solve G(V) = 0 row-wise, G 1-strongly monotone in V when ``monotone``.

    ``G(V, rows=None)`` evaluates on the given subset of rows.
    """
    r = V0.shape[1]
    if r == 1:
        u, err, it = _bracket_solve(lambda u, rows: G(u[:, None], rows=rows)[:, 0], V0[:, 0], m, eps_rows)
        return u[:, None], err, it
    V, res = _root_rows(G, V0, eps_rows)
    err = res / m
    it = 1
    bad = err > eps_rows
    if np.any(bad) and monotone:
        idx = np.flatnonzero(bad)

        def Gsub(X):
            return G(X, rows=idx)

        Vb, eb, it = _picard(Gsub, V[idx], m, L, eps_rows[idx], PICARD_MAX_ITER)
        V[idx], err[idx] = Vb, eb
    return V, err, it


def resolvent_batch(spec: OperatorSpec, lam: float, W, tol: ToleranceConfig = DEFAULT_TOL,
                    raise_on_failure: bool = True, guess=None) -> BatchReport:
    """Row-wise (I + lam T)^-1 W.

    ``guess`` (same shape as W) seeds iterative solves; results do not depend
    on it beyond the certified error bound.
    """
    lam = _check_lam(lam)
    W = _as_batch(W, spec.dim)
    d = spec.dim
    eps_rows = _tolerance(W, tol.eps_res)
    Z0 = W if guess is None else np.asarray(guess, dtype=float).reshape(W.shape)

    plan = _plan(spec)
    M, c = plan.affine
    it = 0

    if plan.atomic is not None:
        Z = plan.atomic(W, lam)
        err = np.zeros(W.shape[0])
    elif not plan.nonlinear and plan.prox is None:
        H = np.eye(d) + lam * M
        rhs = W - lam * c
        if plan.subspace is None:
            Z = np.linalg.solve(H, rhs.T).T
            err = _linear_error(H, Z, rhs)
        else:
            B, z0 = plan.subspace
            if B.shape[1] == 0:
                Z = np.broadcast_to(z0, W.shape).copy()
                err = np.zeros(W.shape[0])
            else:
                Hr = B.T @ H @ B
                rr = (rhs - z0 @ H.T) @ B
                Y = np.linalg.solve(Hr, rr.T).T
                Z = Y @ B.T + z0
                err = _linear_error(Hr, Y, rr)
    else:
        Fs = plan.nonlinear
        L = lam * (float(np.linalg.norm(M, 2)) + sum(f[1] for f in Fs))

        def F(Z):
            out = Z @ M.T + c
            for f, _ in Fs:
                out = out + f(Z)
            return out

        if plan.subspace is not None:
            B, z0 = plan.subspace
            if B.shape[1] == 0:
                Z = np.broadcast_to(z0, W.shape).copy()
                err = np.zeros(W.shape[0])
            else:
                def G(Y, rows=None):
                    Wr = W if rows is None else W[rows]
                    Z = Y @ B.T + z0
                    return (Z - Wr + lam * F(Z)) @ B

                Y0 = (Z0 - z0) @ B
                Y, err, it = _solve_equation(G, Y0, 1.0, 1.0 + L, eps_rows, True)
                Z = Y @ B.T + z0
        elif plan.prox is not None:
            R = plan.prox

            def Phi(U, rows=None):
                Wr = W if rows is None else W[rows]
                return U - Wr + lam * F(R(U, lam))

            U0 = W - lam * F(Z0) if guess is not None else W.copy()
            U, err, it = _solve_equation(Phi, U0, 1.0, 1.0 + L, eps_rows, d == 1)
            Z = R(U, lam)
            bad = err > eps_rows
            if d > 1 and np.any(bad):
                idx = np.flatnonzero(bad)
                Z[idx], err[idx], it = _forward_backward(F, R, lam, W[idx], 1.0 + L, eps_rows[idx])
        else:
            def G(Z, rows=None):
                Wr = W if rows is None else W[rows]
                return Z - Wr + lam * F(Z)

            Z, err, it = _solve_equation(G, Z0.copy(), 1.0, 1.0 + L, eps_rows, True)

    converged = err <= eps_rows
    report = BatchReport(Z, err, it, converged)
    if raise_on_failure and not np.all(converged):
        worst = int(np.argmax(err - eps_rows))
        raise NoConvergence(f"resolvent error bound {err[worst]:.3g} exceeds tolerance", report.row(worst))
    return report


def _linear_error(H, Z, rhs):
    smin = np.linalg.svd(H, compute_uv=False).min()
    return np.linalg.norm(Z @ H.T - rhs, axis=1) / smin


def _forward_backward(F, R, lam, W, Lb, eps_rows, max_iter=PICARD_MAX_ITER):
    """z <- J(z - g B(z)) with B(z) = z - w + lam F(z), step g = 1/Lb^2."""
    g = 1.0 / Lb**2

    def B(Z):
        return Z - W + lam * F(Z)

    Z = W.copy()
    BZ = B(Z)
    err = np.full(W.shape[0], np.inf)
    it = 0
    while np.any(err > eps_rows) and it < max_iter:
        it += 1
        Zn = R(Z - g * BZ, g * lam)
        BZn = B(Zn)
        # (Z - Zn)/g - B(Z) + B(Zn) lies in (B + lam P)(Zn), which is 1-strongly monotone
        err = np.linalg.norm((Z - Zn) / g - BZ + BZn, axis=1)
        Z, BZ = Zn, BZn
    return Z, err, it


# ------------------------------------------------------------ public entry points


def resolvent(spec: OperatorSpec, lam: float, w, tol: ToleranceConfig = DEFAULT_TOL) -> SolveReport:
    """z = (I + lam T)^-1 w for a single point."""
    w = as_vector(w, spec.dim)
    return resolvent_batch(spec, lam, w[None, :], tol).row(0)


def yosida_evaluator(spec: OperatorSpec, lam: float, tol: ToleranceConfig = DEFAULT_TOL):
    """A batched map X -> T_lam X with everything independent of X precomputed."""
    lam = _check_lam(lam)
    form = affine_form(spec)
    if form is not None:
        M, c = form
        H = np.eye(spec.dim) + lam * M
        Mh, ch = np.linalg.solve(H, M), np.linalg.solve(H, c)
        return lambda X: X @ Mh.T + ch
    if isinstance(spec, Subdifferential):
        fn = spec.fn
        return lambda X: fn.envelope_grad(X, lam)
    if isinstance(spec, (NormalCone, GraphNormalCone)):
        s = spec.set
        return lambda X: s.excess(X) / lam
    if isinstance(spec, Yosida):
        return yosida_evaluator(spec.inner, spec.lam + lam, tol)
    if isinstance(spec, ProductLift):
        dy = spec.dim_y
        inner = yosida_evaluator(spec.inner, lam, tol)
        return lambda X: np.hstack([np.zeros((X.shape[0], dy)), inner(X[:, dy:])])
    return lambda X: (X - resolvent_batch(spec, lam, X, tol).solution) / lam


def yosida_batch(spec: OperatorSpec, lam: float, X, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Row-wise Yosida regularization T_lam X, using closed forms where they exist."""
    X = _as_batch(X, spec.dim)
    return yosida_evaluator(spec, lam, tol)(X)


def yosida_eval(spec: OperatorSpec, lam: float, x, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """T_lam x = (x - J_lam x) / lam."""
    x = as_vector(x, spec.dim)
    return yosida_batch(spec, lam, x[None, :], tol)[0]


def solve_probe_inclusion(T_n: OperatorSpec, x, xstar, tol: ToleranceConfig = DEFAULT_TOL) -> SolveReport:
    """The x_n with x* in (x_n - x) + T_n x_n, i.e. the unit resolvent at x + x*."""
    x = as_vector(x, T_n.dim)
    xstar = as_vector(xstar, T_n.dim)
    return resolvent(T_n, 1.0, x + xstar, tol)
