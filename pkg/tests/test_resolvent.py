import numpy as np
import pytest

from monolab.errors import DimensionError, NoConvergence, NotResolvable
from monolab.operators import (AbsValueSum, BoxSet, FiniteGraph, IndicatorOf, Linear, NormalCone, SampledGraph,
                               ShiftedPower, SingletonSet, Subdifferential, SumOf, Yosida, Zero,
                               graph_monotone_check)
from monolab.resolvent import (is_resolvable, resolvent, resolvent_batch, solve_probe_inclusion,
                               strongly_monotone_solve, yosida_batch, yosida_eval)

ABS = Subdifferential(AbsValueSum(1))
N_MINUS = NormalCone(SingletonSet([-1.0]))


def brute_prox(f, w, lam, lo=-10.0, hi=10.0, n=2_000_001):
    """argmin_z f(z) + (z - w)^2 / (2 lam) on a fine grid."""
    z = np.linspace(lo, hi, n)
    return z[np.argmin(f(z) + (z - w) ** 2 / (2 * lam))]


@pytest.mark.parametrize("spec,lam,w,z", [
    (Zero(1), 1.0, [5.0], [5.0]),
    (N_MINUS, 0.5, [5.0], [-1.0]),
    (Linear([[1.0]]), 1.0, [4.0], [2.0]),
    (ABS, 1.0, [3.0], [2.0]),
])
def test_resolvent_examples(spec, lam, w, z):
    rep = resolvent(spec, lam, w)
    assert rep.converged
    assert rep.solution == pytest.approx(z, abs=1e-12)
    assert rep.residual <= 1e-10


def test_abs_prox_matches_brute_force_minimisation():
    for w, lam in [(3.0, 1.0), (-0.4, 1.0), (0.7, 0.25), (-2.5, 2.0)]:
        z = resolvent(ABS, lam, [w]).solution[0]
        assert z == pytest.approx(brute_prox(np.abs, w, lam), abs=2e-5)


def test_yosida_of_yosida_matches_brute_force():
    # J of (|.|)_mu at w minimizes the Huber envelope plus the proximity term
    mu, lam = 0.5, 0.7

    def huber(z):
        return np.where(np.abs(z) <= mu, z**2 / (2 * mu), np.abs(z) - mu / 2)

    for w in (-3.0, 0.2, 1.1, 4.0):
        z = resolvent(Yosida(ABS, mu), lam, [w]).solution[0]
        assert z == pytest.approx(brute_prox(huber, w, lam), abs=2e-5)


@pytest.mark.parametrize("spec,lam,x,v", [
    (N_MINUS, 0.5, [0.0], [2.0]),
    (Zero(1), 3.0, [7.0], [0.0]),
    (ABS, 1.0, [3.0], [1.0]),
])
def test_yosida_examples(spec, lam, x, v):
    assert yosida_eval(spec, lam, x) == pytest.approx(v, abs=1e-12)


def test_yosida_linear_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(20):
        B = rng.normal(size=(3, 3))
        M = B @ B.T + (B - B.T)
        lam = rng.uniform(0.01, 3.0)
        x = rng.normal(size=3)
        expected = np.linalg.solve(np.eye(3) + lam * M, M @ x)
        assert yosida_eval(Linear(M), lam, x) == pytest.approx(expected, abs=1e-8)


def test_yosida_samples_are_monotone():
    X = np.linspace(-3, 3, 41)[:, None]
    for spec in (ABS, N_MINUS, Linear([[2.0]]), NormalCone(BoxSet([0.0], [1.0]))):
        V = yosida_batch(spec, 0.3, X)
        assert graph_monotone_check(SampledGraph(1, X, V)).is_monotone


@pytest.mark.parametrize("T,x,xs,xn", [
    (Zero(1), [1.0], [0.0], [1.0]),
    (NormalCone(SingletonSet([0.0])), [3.0], [-7.0], [0.0]),
    (Linear([[1.0]]), [2.0], [2.0], [2.0]),
])
def test_probe_inclusion_examples(T, x, xs, xn):
    assert solve_probe_inclusion(T, x, xs).solution == pytest.approx(xn, abs=1e-12)


def test_strongly_monotone_solve_examples():
    assert strongly_monotone_solve(lambda z: z - 1, 1.0, 1.0, [0.0]).solution == pytest.approx([1.0])
    assert strongly_monotone_solve(lambda z: 2 * z - 4, 2.0, 2.0, [0.0]).solution == pytest.approx([2.0])
    # z + (z + 1) / 0.5 - 5 = 0
    rep = strongly_monotone_solve(lambda z: z + (z + 1) / 0.5 - 5, 3.0, 3.0, [0.0])
    assert rep.solution == pytest.approx([1.0], abs=1e-10)


def test_strongly_monotone_solve_reports_cap():
    with pytest.raises(NoConvergence) as info:
        strongly_monotone_solve(lambda z: z + 0.9 * np.sin(z) - 3, 0.1, 1.9, [0.0], max_iter=3)
    assert info.value.report is not None
    assert not info.value.report.converged
    assert info.value.report.iterations == 3


def test_strongly_monotone_solve_rejects_bad_constants():
    with pytest.raises(ValueError):
        strongly_monotone_solve(lambda z: z, 2.0, 1.0, [0.0])


def test_two_set_valued_parts_not_resolvable():
    spec = SumOf((N_MINUS, NormalCone(SingletonSet([1.0]))))
    assert not is_resolvable(spec)
    with pytest.raises(NotResolvable):
        resolvent(spec, 1.0, [0.0])


def test_finite_graph_not_resolvable():
    g = FiniteGraph(SampledGraph.from_pairs([([0.0], [0.0])]))
    with pytest.raises(NotResolvable):
        resolvent(g, 1.0, [0.0])


def test_sum_of_prox_and_smooth_part():
    # J of |.| + x: minimize |z| + z^2/2 + (z - w)^2/2
    spec = SumOf((ABS, Linear([[1.0]])))
    for w in (-4.0, 0.5, 3.0):
        z = resolvent(spec, 1.0, [w]).solution[0]
        assert z == pytest.approx(brute_prox(lambda t: np.abs(t) + t**2 / 2, w, 1.0), abs=2e-5)


def test_sum_of_yosida_parts_in_two_dimensions():
    f = ShiftedPower([1.0, -1.0], p=1)
    spec = SumOf((Yosida(Subdifferential(f), 0.3), Yosida(NormalCone(BoxSet([0.0, 0.0], [1.0, 1.0])), 0.2)))
    rng = np.random.default_rng(5)
    W = rng.normal(scale=3, size=(25, 2))
    rep = resolvent_batch(spec, 0.8, W)
    assert np.all(rep.converged)
    # residual of z - w + lam F(z) = 0 checked independently
    Z = rep.solution
    F = yosida_batch(spec.parts[0].inner, 0.3, Z) + yosida_batch(spec.parts[1].inner, 0.2, Z)
    assert np.abs(Z - W + 0.8 * F).max() < 1e-8


def test_constrained_sum_reduces_to_subspace():
    spec = SumOf((Linear([[1.0]]), NormalCone(BoxSet([0.0], [1.0]))))
    assert resolvent(spec, 1.0, [5.0]).solution == pytest.approx([1.0])
    assert resolvent(spec, 1.0, [1.0]).solution == pytest.approx([0.5])
    assert resolvent(spec, 1.0, [-3.0]).solution == pytest.approx([0.0])


def test_indicator_subdifferential_is_projection():
    spec = Subdifferential(IndicatorOf(BoxSet([-1.0], [2.0])))
    assert resolvent(spec, 4.0, [7.0]).solution == pytest.approx([2.0])


def test_batch_rows_match_single_solves_and_warm_start():
    spec = SumOf((Yosida(ABS, 0.01), Yosida(Linear([[3.0]]), 0.5)))
    W = np.linspace(-5, 5, 13)[:, None]
    rep = resolvent_batch(spec, 1.0, W)
    warm = resolvent_batch(spec, 1.0, W, guess=rep.solution + 0.01)
    for i, w in enumerate(W):
        single = resolvent(spec, 1.0, w)
        assert single.solution == pytest.approx(rep.solution[i], abs=1e-9)
        assert warm.solution[i] == pytest.approx(rep.solution[i], abs=1e-9)


def test_resolvent_rejects_bad_input():
    with pytest.raises(ValueError):
        resolvent(Zero(1), 0.0, [1.0])
    with pytest.raises(DimensionError):
        resolvent(Zero(2), 1.0, [1.0])
