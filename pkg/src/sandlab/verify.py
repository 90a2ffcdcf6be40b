"""Executable self-checks grouped into named suites.

``small-oracles``  burning test against chain reachability, recurrent counts
                   against spanning trees, Tutte route against enumeration
``abelian``        toppling-order independence, accounting identity and
                   mirror commutation on random small multigraphs
``staircase``      flower activity against the ``(R, Z)`` classification

Each check yields a record ``{"suite", "check", "passed", "detail"}``.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from .analytic import tutte_zeta_s
from .chipfiring import (FLOWER_ACTIVITIES, find_orbit, flower_activity_from_RZ, mirror,
                         orbit_states, parallel_step, petal_invariant)
from .core import (add_and_stabilize, enumerate_recurrent, is_recurrent, mean_height,
                   spanning_tree_count, stabilize)
from .graph import (MultiGraph, SinkedGraph, build_bracelet, build_complete, build_cycle,
                    build_flower, build_ladder)
from .rng import RngStream

__all__ = ["SUITES", "verify_suite", "reachable_recurrent", "random_small_graph",
           "accounting_holds", "small_instances"]


def reachable_recurrent(g):
    """Recurrent configurations found as the closure of the maximal stable one under additions.

    The maximal stable configuration is recurrent and the recurrent class is
    closed and irreducible, so breadth-first search over single additions
    followed by stabilisation visits exactly the recurrent states.
    """
    start = np.zeros(g.num_vertices, np.int64)
    start[g.nonsinks] = g.degree[g.nonsinks] - 1
    key = tuple(start[g.nonsinks])
    seen = {key}
    todo = deque([start])
    while todo:
        c = todo.popleft()
        for v in g.nonsinks:
            nxt, _ = add_and_stabilize(g, c, int(v), accelerate=False)
            nxt[g.is_sink] = 0
            k = tuple(nxt[g.nonsinks])
            if k not in seen:
                seen.add(k)
                todo.append(nxt)
    return seen


def small_instances():
    """The tiny sinked graphs used by the exhaustive oracles."""
    return {
        "Z4": build_cycle(4, with_sink=True),
        "B4": build_bracelet(4, with_sink=True),
        "K3": build_complete(3, with_sink=True),
        "ladder3": build_ladder(3),
    }


def random_small_graph(gen, max_vertices=12, loops=True):
    """Random connected multigraph (random tree plus extra, possibly parallel, edges)."""
    n = int(gen.integers(2, max_vertices + 1))
    edges = []
    for v in range(1, n):
        edges.append((int(gen.integers(0, v)), v, int(gen.integers(1, 3))))
    for _ in range(int(gen.integers(0, n + 1))):
        a, b = map(int, gen.integers(0, n, size=2))
        if a == b and not loops:
            continue
        edges.append((a, b, 1))
    return MultiGraph.from_edges(n, edges, "random-small", {"n": n})


def accounting_holds(graph, before, after, odometer):
    """``after = before - L u`` at every vertex, sinks included."""
    lap = graph.laplacian()
    return bool(np.array_equal(np.asarray(after), np.asarray(before) - lap @ np.asarray(odometer)))


def _record(suite, check, passed, detail=""):
    return {"suite": suite, "check": check, "passed": bool(passed), "detail": detail}


def _small_oracles(seed):
    out = []
    for name, g in small_instances().items():
        burning = {tuple(c[g.nonsinks]) for c in enumerate_recurrent(g)}
        reach = reachable_recurrent(g)
        out.append(_record("small-oracles", f"burning==reachability[{name}]", burning == reach,
                           f"{len(burning)} vs {len(reach)}"))
        kappa = spanning_tree_count(g.graph, g.sinks)
        out.append(_record("small-oracles", f"count==kappa[{name}]", len(burning) == kappa,
                           f"{len(burning)} vs {kappa}"))
    for name, g in (("K3", build_complete(3, True)), ("K4", build_complete(4, True)),
                    ("Z4", build_cycle(4, True)), ("Z5", build_cycle(5, True))):
        enum = mean_height(enumerate_recurrent(g), g.nonsinks)
        _, per_nonsink = tutte_zeta_s(g.graph, g.sinks[0])
        out.append(_record("small-oracles", f"tutte==enumeration[{name}]", enum == per_nonsink,
                           f"{per_nonsink} vs {enum}"))
    return out


def _abelian(seed, instances=100):
    gen = RngStream(seed, 1).gen
    same = accounting = mirror_ok = True
    mirror_tested = 0
    for i in range(instances):
        graph = random_small_graph(gen)
        n_sinks = int(gen.integers(1, min(3, graph.num_vertices)))
        sinks = gen.choice(graph.num_vertices, size=n_sinks, replace=False)
        g = SinkedGraph(graph, sinks)
        c = gen.integers(0, 3 * graph.max_degree, size=graph.num_vertices)
        results = [stabilize(g, c, order=o, rng=gen) for o in ("fifo", "random", "max")]
        for h, u in results[1:]:
            same &= np.array_equal(h, results[0][0]) and np.array_equal(u, results[0][1])
        accounting &= accounting_holds(graph, c, *results[0])
        m = gen.integers(0, 2 * graph.degree)
        step = parallel_step(graph, m)
        if np.all(step <= 2 * graph.degree - 1):
            mirror_tested += 1
            mirror_ok &= np.array_equal(mirror(graph, step), parallel_step(graph, mirror(graph, m)))
    return [
        _record("abelian", "order-independence", same, f"{instances} instances"),
        _record("abelian", "accounting-identity", accounting, f"{instances} instances"),
        _record("abelian", "mirror-commutation", mirror_ok, f"{mirror_tested} instances in range"),
    ]


def _staircase(seed, n=1000, trials=10):
    g = build_flower(n)
    agree = quantised = period_ok = invariant = True
    total = 0
    for j, lam in enumerate((1.0, 1.9, 2.5, 3.1, 4.0)):
        for i in range(trials):
            gen = RngStream(seed, (j << 32) | i).gen
            c = gen.poisson(lam, g.num_vertices)
            orbit = find_orbit(g, c)
            z, _ = petal_invariant(g, c)
            agree &= orbit.activity == flower_activity_from_RZ(n, int(c.sum()), z)
            quantised &= orbit.activity in FLOWER_ACTIVITIES
            period_ok &= orbit.period <= 3
            invariant &= petal_invariant(g, orbit_states(g, c, orbit)[0])[0] == z
            total += 1
    return [
        _record("staircase", "activity==RZ-classification", agree, f"{total} trials, n={n}"),
        _record("staircase", "activity-quantised", quantised),
        _record("staircase", "period<=3", period_ok),
        _record("staircase", "petal-invariant-preserved", invariant),
    ]


SUITES = {"small-oracles": _small_oracles, "abelian": _abelian, "staircase": _staircase}


def verify_suite(name, seed=0):
    """Run a named suite (or ``"all"``) and return its records."""
    if name == "all":
        return list(itertools.chain.from_iterable(f(seed) for f in SUITES.values()))
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed)
