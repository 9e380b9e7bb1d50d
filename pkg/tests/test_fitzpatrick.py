import numpy as np
import pytest

from monolab.errors import AllInfinite, DimensionError, EmptyGraph
from monolab.fitzpatrick import (GridSpec, L_set, ScalarField, classify, conjugate_field, finite_graph_conjugate,
                                 fitzpatrick_eval, fitzpatrick_eval_batch, fitzpatrick_field, in_F_class)
from monolab.operators import DualPair, SampledGraph
from monolab import kernels

ORIGIN = SampledGraph.from_pairs([([0.0], [0.0])])
BIG = GridSpec.from_step((-10, 10), (-10, 10), 0.1)


def diagonal(ts):
    ts = np.asarray(ts, dtype=float)
    return SampledGraph(1, ts[:, None], ts[:, None])


def test_grid_has_exact_origin_and_counts():
    assert BIG.shape == (201, 201)
    assert np.any(BIG.axes[0] == 0.0)
    assert BIG.nodes.shape == (201 * 201, 2)


def test_grid_rejects_bad_specs():
    with pytest.raises(ValueError):
        GridSpec([-1.0, -1.0], [1.0, 1.0], [4, 4])  # straddles zero without a zero node
    with pytest.raises(DimensionError):
        GridSpec([-1.0], [1.0], [3])
    with pytest.raises(ValueError):
        GridSpec([1.0, 0.0], [0.0, 1.0], [3, 3])


def test_fitzpatrick_of_origin_is_zero():
    rng = np.random.default_rng(0)
    for p in rng.normal(size=(10, 2)) * 5:
        assert fitzpatrick_eval(ORIGIN, DualPair([p[0]], [p[1]])) == 0.0


def test_fitzpatrick_of_single_point():
    g = SampledGraph.from_pairs([([1.0], [1.0])])
    for x, xs in [(0.0, 0.0), (2.0, -3.0), (0.5, 0.5)]:
        assert fitzpatrick_eval(g, DualPair([x], [xs])) == pytest.approx(x + xs - 1)


def test_fitzpatrick_of_diagonal_at_origin():
    assert fitzpatrick_eval(diagonal([-1, 0, 1]), DualPair([0.0], [0.0])) == 0.0


def test_fitzpatrick_empty_graph():
    with pytest.raises(EmptyGraph):
        fitzpatrick_eval_batch(SampledGraph(1), [[0.0, 0.0]])


def test_conjugate_of_zero_field_is_box_support():
    phi_star = conjugate_field(ScalarField(BIG, np.zeros(BIG.shape)))
    ax = BIG.axes[0]
    i, j = int(np.argmin(np.abs(ax - 0.5))), int(np.argmin(np.abs(ax - 0.0)))
    assert phi_star.values[i, j] == pytest.approx(5.0, abs=1e-12)
    assert phi_star.values[j, j] == 0.0
    X, XS = np.meshgrid(ax, ax, indexing="ij")
    assert np.abs(phi_star.values - 10 * (np.abs(X) + np.abs(XS))).max() < 1e-9


def test_conjugate_of_diagonal_fitzpatrick():
    grid = GridSpec.from_step((-4, 4), (-4, 4), 0.05)
    X, XS = np.meshgrid(*grid.axes, indexing="ij")
    phi_star = conjugate_field(ScalarField(grid, (X + XS) ** 2 / 4))
    ax = grid.axes[0]
    k = int(np.argmin(np.abs(ax - 1.0)))
    assert phi_star.values[k, k] == pytest.approx(1.0, abs=0.05)
    off = int(np.argmin(np.abs(ax + 1.0)))
    assert phi_star.values[k, off] > 5.0


def test_line_conjugate_matches_brute_force():
    rng = np.random.default_rng(2)
    grid = GridSpec([-2.0, -1.0, -1.5, -3.0], [2.0, 1.0, 1.5, 3.0], [5, 5, 7, 7])
    g = SampledGraph(2, rng.normal(size=(6, 2)), rng.normal(size=(6, 2)))
    phi = fitzpatrick_field(g, grid)
    a = conjugate_field(phi, "lines").values
    b = conjugate_field(phi, "brute").values
    assert np.abs(a - b).max() < 1e-12


def test_conjugate_rejects_unknown_method_and_infinite_field():
    f = ScalarField(GridSpec([-1.0, -1.0], [1.0, 1.0], [3, 3]), np.full((3, 3), np.inf))
    with pytest.raises(AllInfinite):
        conjugate_field(f)
    with pytest.raises(ValueError):
        conjugate_field(ScalarField(f.grid, np.zeros((3, 3))), "fft")


def test_lp_conjugate_against_grid_conjugate_of_finite_graph():
    # the grid conjugate is a lower bound that becomes exact where the maximizer is a node
    g = diagonal([-1.0, 0.0, 1.0])
    grid = GridSpec.from_step((-2, 2), (-2, 2), 0.5)
    grid_conj = conjugate_field(fitzpatrick_field(g, grid)).values.ravel()
    exact = finite_graph_conjugate(g, grid.nodes)
    finite = np.isfinite(exact)
    assert np.all(grid_conj[finite] <= exact[finite] + 1e-9)
    for p in g.points:
        assert finite_graph_conjugate(g, p[None])[0] == pytest.approx(p[0] * p[1])
    assert finite_graph_conjugate(g, [[0.0, 1.0]])[0] == np.inf


def test_F_class_examples():
    grid = GridSpec.from_step((-2, 2), (-2, 2), 0.5)
    phi = fitzpatrick_field(ORIGIN, grid)
    chk = in_F_class(phi)
    assert not chk.ok and chk.worst_gap < 0
    assert chk.worst_node[0] * chk.worst_node[1] > 0
    assert in_F_class(conjugate_field(phi)).ok
    pairing = ScalarField(grid, grid.pairing)
    chk = in_F_class(pairing)
    assert chk.ok and chk.worst_gap == 0.0
    assert len(L_set(pairing)) == grid.nodes.shape[0]


def test_L_set_of_origin_on_large_grid():
    L = L_set(conjugate_field(fitzpatrick_field(ORIGIN, BIG)))
    assert len(L) == 1 and L.x[0, 0] == 0.0 and L.xstar[0, 0] == 0.0


def test_L_set_of_diagonal_field():
    grid = GridSpec.from_step((-2, 2), (-2, 2), 0.25)
    X, XS = np.meshgrid(*grid.axes, indexing="ij")
    f = ScalarField(grid, X**2 + 100 * np.abs(X - XS))
    L = L_set(f)
    assert len(L) == grid.axes[0].size
    assert np.array_equal(L.x, L.xstar)


def test_classify_origin():
    c = classify(ORIGIN, BIG)
    assert c.is_monotone and c.is_representable and not c.is_maximal
    assert c.evidence["L_size"] == 1 and c.evidence["hausdorff_to_L"] == 0.0


def test_classify_dense_identity_samples():
    grid = GridSpec.from_step((-3, 3), (-3, 3), 0.1)
    c = classify(diagonal(grid.axes[0]), grid)
    assert c.is_monotone and c.is_representable and c.is_maximal


def test_classify_non_monotone():
    c = classify(SampledGraph.from_pairs([([0.0], [1.0]), ([1.0], [0.0])]), BIG)
    assert not c.is_monotone and not c.is_representable and not c.is_maximal
    assert c.evidence["monotone_gap"] == pytest.approx(-1.0)


def test_classify_input_checks():
    with pytest.raises(EmptyGraph):
        classify(SampledGraph(1), BIG)
    with pytest.raises(ValueError):
        classify(SampledGraph.from_pairs([([20.0], [0.0])]), BIG)


def test_monotone_graph_lies_in_L_of_conjugate():
    rng = np.random.default_rng(4)
    grid = GridSpec.from_step((-2, 2), (-3, 3), 0.1)
    t = np.round(rng.uniform(-1.5, 1.5, size=12) / 0.1) * 0.1
    g = SampledGraph(1, t[:, None], np.sign(t)[:, None] + t[:, None])
    L = L_set(conjugate_field(fitzpatrick_field(g, grid)))
    d, _ = kernels.directed_hausdorff(g.points, L.points)
    assert d <= 1e-9


def test_interior_nodes_keep_margin():
    grid = GridSpec.from_step((-1, 1), (-2, 2), 0.5)
    inner = grid.interior_nodes(0.5)
    assert inner.shape == (3 * 7, 2)
    assert np.all(np.abs(inner[:, 0]) <= 0.5) and np.all(np.abs(inner[:, 1]) <= 1.5)
