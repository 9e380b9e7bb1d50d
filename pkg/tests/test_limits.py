import numpy as np
import pytest

from monolab.errors import EmptyGraph
from monolab.fitzpatrick import GridSpec, classify
from monolab.limits import (OperatorSequence, Status, alternating_sequence, box_normal_sequence,
                            cluster_certificate, constant_sequence, index_plan, liminf_member, liminf_members,
                            limsup_member, limsup_members, mosco_maximality_probe, sample_liminf_graph,
                            shifted_quadratic_sequence)
from monolab.operators import DualPair, Linear, SampledGraph, graph_monotone_check

ALT = alternating_sequence()
IDENTITY = constant_sequence(Linear([[1.0]]))
M, NM, INC = Status.MEMBER, Status.NON_MEMBER, Status.INCONCLUSIVE


def pair(x, xs):
    return DualPair([x], [xs])


def test_index_plan_full_and_sampled():
    assert index_plan(10).tolist() == list(range(1, 11))
    assert index_plan(100, max_index=60).tolist() == list(range(1, 61))
    plan = index_plan(10**6, max_points=500)
    assert plan[0] == 1 and plan[-1] == 10**6
    assert np.all(np.diff(plan) > 0) and plan.size <= 500
    assert np.sum(plan >= 5 * 10**5) > 300
    with pytest.raises(ValueError):
        index_plan(0)


@pytest.mark.parametrize("p,status", [((0, 0), M), ((1, 0), NM), ((0, 1), NM), ((0.3, 0), NM)])
def test_alternating_liminf(p, status):
    v = liminf_member(ALT, pair(*p))
    assert v.status is status
    assert len(v.evidence) == 10**4


@pytest.mark.parametrize("p,status", [((1, 0), M), ((0, 1), M), ((1, 1), NM)])
def test_alternating_limsup(p, status):
    assert limsup_member(ALT, pair(*p)).status is status


def test_alternating_closed_form_solutions():
    v = liminf_member(ALT, pair(1, 0), horizon=20)
    x = v.evidence.x[:, 0]
    assert np.array_equal(x, np.where(np.arange(1, 21) % 2 == 0, 0.0, 1.0))


def test_constant_identity_membership():
    assert liminf_member(IDENTITY, pair(2, 2)).status is M
    assert limsup_member(IDENTITY, pair(2, 2)).status is M
    assert liminf_member(IDENTITY, pair(2, 0)).status is NM


def test_limsup_samples_of_alternating_are_not_monotone():
    g = SampledGraph.from_pairs([([1.0], [0.0]), ([0.0], [1.0])])
    v = limsup_members(ALT, g)
    assert all(x.status is M for x in v)
    chk = graph_monotone_check(g)
    assert not chk.is_monotone and chk.worst_gap == pytest.approx(-1.0, abs=1e-9)


def test_liminf_members_are_limsup_members():
    rng = np.random.default_rng(11)
    pts = np.round(rng.uniform(-2, 2, size=(30, 2)), 1)
    pts[:10, 1] = 2 * pts[:10, 0]
    g = SampledGraph(1, pts[:, :1], pts[:, 1:])
    seq = shifted_quadratic_sequence()
    inf_v = liminf_members(seq, g)
    sup_v = limsup_members(seq, g)
    for a, b in zip(inf_v, sup_v):
        assert not (a.status is M and b.status is not M)
    assert sum(a.status is M for a in inf_v) >= 10


def test_sampled_liminf_graph_is_monotone_and_representable():
    grid = GridSpec.from_step((-1.5, 1.5), (-1.5, 1.5), 0.1)
    nodes = grid.nodes
    cands = SampledGraph(1, nodes[:, :1], nodes[:, 1:])
    g, _ = sample_liminf_graph(box_normal_sequence(), cands, horizon=2000)
    assert len(g) > 0
    assert graph_monotone_check(g).is_monotone
    # normal cone of [0, 1]: x* = 0 inside, x* <= 0 at 0, x* >= 0 at 1
    assert np.all((g.xstar[:, 0] == 0) | (g.x[:, 0] == 0) | (g.x[:, 0] == 1))
    assert classify(g, grid).is_representable


def test_certificate_alternating_non_member():
    cert = cluster_certificate(ALT, pair(1, 0), SampledGraph.from_pairs([([0.0], [0.0])]))
    assert cert.ok and cert.bounded
    points = sorted(float(c.point[0]) for c in cert.clusters)
    assert points == [0.0, 1.0]
    zero = next(c for c in cert.clusters if c.point[0] == 0.0)
    assert zero.eta.tolist() == [-1.0]
    assert zero.polar_gap == pytest.approx(0.0, abs=1e-12)


def test_certificate_constant_identity():
    diag = SampledGraph(1, np.linspace(-2, 2, 9)[:, None], np.linspace(-2, 2, 9)[:, None])
    cert = cluster_certificate(IDENTITY, pair(2, 0), diag, horizon=200)
    assert cert.ok and len(cert.clusters) == 1
    c = cert.clusters[0]
    assert c.point.tolist() == [1.0] and c.eta.tolist() == [-1.0]


def test_certificate_member_pair_has_zero_eta():
    cert = cluster_certificate(ALT, pair(0, 0), SampledGraph.from_pairs([([0.0], [0.0])]))
    assert cert.ok
    assert all(np.all(c.eta == 0.0) for c in cert.clusters)


def test_certificate_needs_samples():
    with pytest.raises(EmptyGraph):
        cluster_certificate(ALT, pair(0, 0), SampledGraph(1))


def test_mosco_shifted_quadratic():
    grid = GridSpec.from_step((-1, 1), (-2, 2), 0.1)
    t = grid.axes[0]
    cand = SampledGraph(1, t[:, None], 2 * t[:, None])
    rep = mosco_maximality_probe(shifted_quadratic_sequence(), cand, grid)
    assert rep.is_mosco_limit and rep.is_maximal


def test_mosco_alternating_fails():
    grid = GridSpec.from_step((-1, 1), (-1, 1), 0.5)
    rep = mosco_maximality_probe(ALT, SampledGraph.from_pairs([([0.0], [0.0])]), grid)
    assert not rep.is_mosco_limit and not rep.is_maximal
    outside = {tuple(map(float, p)) for p in rep.limsup_outside}
    assert (1.0, 0.0) in outside and (0.0, 1.0) in outside


def test_mosco_constant_maximal():
    grid = GridSpec.from_step((-1, 1), (-1, 1), 0.1)
    t = grid.axes[0]
    rep = mosco_maximality_probe(IDENTITY, SampledGraph(1, t[:, None], t[:, None]), grid, horizon=100)
    assert rep.is_mosco_limit and rep.is_maximal


def test_verdicts_are_deterministic_and_exclusive():
    a = liminf_member(ALT, pair(0.3, 0))
    b = liminf_member(ALT, pair(0.3, 0))
    assert a.status is b.status and np.array_equal(a.evidence.x, b.evidence.x)


def test_offset_between_thresholds_is_inconclusive():
    # x_n = 1 / (1 + c) stays 5 eps_member away from x = 1
    c = 5e-4 / (1 - 5e-4)
    v = liminf_member(constant_sequence(Linear([[c]])), pair(1, 0), horizon=1000)
    assert v.status is INC
    assert v.margins["tail_max"] == pytest.approx(5e-4)
