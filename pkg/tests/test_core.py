import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sandlab.core import (BudgetExceeded, add_and_stabilize, config_from_str, config_to_str,
                          enumerate_recurrent, is_recurrent, mean_height, odometer_lower_bound,
                          spanning_tree_count, stabilize, stabilize_or_detect, unicyclic_count)
from sandlab.graph import (SinkedGraph, build_bracelet, build_complete, build_cycle, build_flower,
                           build_ladder, build_torus)
from sandlab.verify import accounting_holds, random_small_graph


def brute_force(g, c):
    """Topple the lowest-index unstable vertex once until stable (independent reference)."""
    h = list(map(int, c))
    odo = [0] * len(h)
    adj = g.graph.adjacency().toarray()
    deg = adj.sum(axis=1)
    while True:
        bad = [v for v in range(len(h)) if not g.is_sink[v] and h[v] >= deg[v]]
        if not bad:
            return h, odo
        v = bad[0]
        h[v] -= deg[v]
        for w in range(len(h)):
            h[w] += adj[v, w]
        odo[v] += 1


def test_stabilize_single_toppling():
    g = build_cycle(4, with_sink=True)
    h, u = stabilize(g, [0, 2, 0, 0])
    assert list(h[1:]) == [0, 1, 0] and list(u) == [0, 1, 0, 0]


def test_stabilize_stable_is_identity():
    g = build_bracelet(5, with_sink=True)
    c = [0, 3, 2, 1, 3]
    h, u = stabilize(g, c)
    assert list(h) == c and not u.any()


def test_stabilize_matches_brute_force():
    g = build_cycle(4, with_sink=True)
    h, u = stabilize(g, [0, 2, 2, 2])
    bh, bu = brute_force(g, [0, 2, 2, 2])
    assert list(h) == bh and list(u) == bu


def test_stabilize_rejects_bad_input():
    g = build_cycle(4, with_sink=True)
    with pytest.raises(TypeError):
        stabilize(g.graph, [0, 0, 0, 0])
    with pytest.raises(ValueError):
        stabilize(g, [0, 0, 0])
    with pytest.raises(ValueError):
        stabilize(g, [0, -1, 0, 0])


def test_stabilize_or_detect_examples():
    out = stabilize_or_detect(build_cycle(3), [2, 2, 2])
    assert not out.stabilized and out.config is None
    out = stabilize_or_detect(build_cycle(4), [1, 1, 1, 1])
    assert out.stabilized and not out.odometer.any()
    # vertex 0 sends to both 1 and 3, after which 1 is unstable and topples once
    out = stabilize_or_detect(build_cycle(4), [2, 1, 0, 0])
    assert out.stabilized and list(out.config) == [1, 0, 1, 1] and list(out.odometer) == [1, 1, 0, 0]


def test_add_and_stabilize():
    g = build_cycle(4, with_sink=True)
    # (-,1,2,1): 2 topples, then 1 and 3 (degree 2) topple, then 2 again
    h, u = add_and_stabilize(g, [0, 1, 1, 1], 2)
    assert list(h[1:]) == [1, 0, 1] and list(u) == [0, 1, 2, 1]
    g = build_bracelet(5, with_sink=True)
    h, u = add_and_stabilize(g, [0, 2, 1, 0, 2], 3)
    assert list(h) == [0, 2, 1, 1, 2] and not u.any()
    with pytest.raises(ValueError):
        add_and_stabilize(g, [0, 2, 1, 0, 2], 0)


def test_recurrence_examples():
    b4 = build_bracelet(4, with_sink=True)
    assert is_recurrent(b4, [0, 2, 3, 2])
    assert not is_recurrent(b4, [0, 1, 1, 3])
    z5 = build_cycle(5, with_sink=True)
    assert is_recurrent(z5, [0, 1, 1, 1, 1])
    assert not is_recurrent(z5, [0, 0, 1, 0, 1])
    for g in (b4, z5, build_ladder(4), build_flower(3, True)):
        top = np.where(g.is_sink, 0, g.degree - 1)
        assert is_recurrent(g, top)
    with pytest.raises(ValueError):
        is_recurrent(z5, [0, 2, 1, 1, 1])


def test_enumerate_recurrent_examples():
    k3 = build_complete(3, True)
    assert [tuple(c[1:]) for c in enumerate_recurrent(k3)] == [(0, 1), (1, 0), (1, 1)]
    z4 = build_cycle(4, True)
    confs = {tuple(c[1:]) for c in enumerate_recurrent(z4)}
    assert confs == {(1, 1, 1), (0, 1, 1), (1, 0, 1), (1, 1, 0)}
    b3 = build_bracelet(3, True)
    assert len(enumerate_recurrent(b3)) == spanning_tree_count(b3.graph, b3.sinks)
    with pytest.raises(BudgetExceeded):
        enumerate_recurrent(build_torus(4) and SinkedGraph(build_torus(4), [0]), budget=1000)


def test_spanning_tree_counts():
    assert spanning_tree_count(build_complete(4)) == 16
    assert spanning_tree_count(build_complete(5)) == 125
    for n in (3, 7, 12):
        assert spanning_tree_count(build_cycle(n)) == n
    assert spanning_tree_count(build_bracelet(3)) == 12


def test_unicyclic_counts():
    assert unicyclic_count(build_complete(3)) == 1
    assert unicyclic_count(build_complete(4)) == 15
    assert unicyclic_count(build_cycle(6)) == 1
    with pytest.raises(BudgetExceeded):
        unicyclic_count(build_complete(9))


def test_mean_height_k3():
    k3 = build_complete(3, True)
    assert mean_height(enumerate_recurrent(k3), k3.nonsinks) == pytest.approx(2 / 3)


def test_config_strings():
    c = np.array([0, 2, 1, 0])
    assert config_to_str(c) == "0 2 1 0"
    assert np.array_equal(config_from_str("0 2 1 0"), c)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_abelian_and_accounting(seed):
    gen = np.random.default_rng(seed)
    graph = random_small_graph(gen, max_vertices=8)
    g = SinkedGraph(graph, [int(gen.integers(graph.num_vertices))])
    c = gen.integers(0, 3 * graph.max_degree, size=graph.num_vertices)
    ref = stabilize(g, c)
    for order in ("random", "max"):
        h, u = stabilize(g, c, order=order, rng=gen)
        assert np.array_equal(h, ref[0]) and np.array_equal(u, ref[1])
    bh, bu = brute_force(g, c)
    assert list(ref[0]) == bh and list(ref[1]) == bu
    assert accounting_holds(graph, c, *ref)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_extra_sinks_never_increase_odometer(seed):
    gen = np.random.default_rng(seed)
    graph = random_small_graph(gen, max_vertices=8)
    if graph.num_vertices < 3:
        return
    s, x = gen.choice(graph.num_vertices, size=2, replace=False)
    c = gen.integers(0, 3 * graph.max_degree, size=graph.num_vertices)
    _, u1 = stabilize(SinkedGraph(graph, [s]), c)
    _, u2 = stabilize(SinkedGraph(graph, [s, x]), c)
    assert np.all(u2 <= u1)


@pytest.mark.parametrize("builder", [build_cycle, build_bracelet, build_flower])
def test_accelerated_matches_plain(builder):
    g = builder(400, with_sink=True)
    gen = np.random.default_rng(1)
    for lam in (0.7, 2.0, 3.5, 6.0):
        c = np.where(g.is_sink, 0, gen.poisson(lam, g.num_vertices))
        h1, u1 = stabilize(g, c, accelerate=False)
        h2, u2 = stabilize(g, c, accelerate=True)
        assert np.array_equal(h1, h2) and np.array_equal(u1, u2)
        low = odometer_lower_bound(g, c)
        assert np.all(low <= u1)
