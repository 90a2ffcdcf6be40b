"""Sandpile configurations, stabilisation, recurrence and exact counting oracles.

A configuration is a 1-D ``int64`` array of heights indexed by vertex.  On a
:class:`~sandlab.graph.SinkedGraph` the entries at sinks are carried along
as absorbed mass: they grow as neighbours topple but sinks never topple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _kernels
from .graph import MultiGraph, SinkedGraph
from .rng import as_generator

__all__ = [
    "StabilizeOutcome",
    "BudgetExceeded",
    "as_config",
    "config_to_str",
    "config_from_str",
    "stabilize",
    "stabilize_or_detect",
    "add_and_stabilize",
    "is_recurrent",
    "enumerate_recurrent",
    "spanning_tree_count",
    "unicyclic_count",
    "odometer_lower_bound",
]

ACCELERATE_MIN_SITES = 20000


class BudgetExceeded(RuntimeError):
    """A brute-force oracle was asked for more work than its budget allows."""


@dataclass(frozen=True)
class StabilizeOutcome:
    """Result of :func:`stabilize_or_detect`.

    ``config`` is None when the configuration does not stabilise; the
    odometer is then the one at the moment the last vertex toppled for the
    first time.
    """

    stabilized: bool
    config: np.ndarray | None
    odometer: np.ndarray


def _parts(g):
    if isinstance(g, SinkedGraph):
        return g.graph, g.is_sink
    return g, np.zeros(g.num_vertices, bool)


def as_config(g, c):
    """Validate ``c`` against ``g`` and return a fresh int64 copy."""
    graph, _ = _parts(g)
    arr = np.array(c, dtype=np.int64).ravel()
    if arr.shape[0] != graph.num_vertices:
        raise ValueError(f"config has {arr.shape[0]} entries, graph has {graph.num_vertices} vertices")
    if np.any(arr < 0):
        raise ValueError("heights must be nonnegative")
    return arr


def config_to_str(c):
    """Single-line decimal rendering, e.g. ``"0 2 1 0"``."""
    return " ".join(str(int(x)) for x in np.asarray(c).ravel())


def config_from_str(text):
    return np.array([int(x) for x in text.split()], dtype=np.int64)


# --- stabilisation ---------------------------------------------------------

def _stabilize_python(graph, active, h, order, gen):
    """Reference single-toppling loop for the ``random`` and ``max`` orders."""
    odo = np.zeros_like(h)
    deg = graph.degree
    while True:
        unstable = np.flatnonzero(active & (h >= deg))
        if unstable.size == 0:
            return h, odo
        if order == "random":
            v = int(gen.choice(unstable))
        else:
            v = int(unstable[np.argmax(h[unstable] - deg[unstable])])
        ws, a = graph.neighbors(v)
        h[v] -= deg[v]
        np.add.at(h, ws, a)
        odo[v] += 1


def stabilize(g, c, order="fifo", rng=None, accelerate=None):
    """Stabilise ``c`` on the sinked graph ``g``.

    Parameters
    ----------
    g : SinkedGraph
    c : array_like
        Heights, one per vertex (sink entries are kept and grow).
    order : {"fifo", "random", "max"}
        Toppling schedule.  ``fifo`` is the compiled batch worklist; the two
        others topple one vertex at a time (uniformly chosen unstable vertex,
        or the most overloaded one) and exist to exercise the abelian property.
    accelerate : bool, optional
        Start from a certified odometer lower bound (see
        :func:`odometer_lower_bound`).  Defaults to True when the graph has
        at least ``ACCELERATE_MIN_SITES`` non-sink vertices.

    Returns
    -------
    config, odometer : ndarray
    """
    if not isinstance(g, SinkedGraph):
        raise TypeError("stabilize needs a SinkedGraph; use stabilize_or_detect for sinkless graphs")
    h = as_config(g, c)
    graph = g.graph
    active = ~g.is_sink
    if order != "fifo":
        if order not in ("random", "max"):
            raise ValueError(f"unknown order {order!r}")
        return _stabilize_python(graph, active, h, order, as_generator(rng))
    if accelerate is None:
        accelerate = g.nonsinks.size >= ACCELERATE_MIN_SITES
    odo = np.zeros_like(h)
    if accelerate and np.any(h[active] >= graph.degree[active]):
        odo = odometer_lower_bound(g, h)
        _kernels.apply_odometer(graph.indptr, graph.indices, graph.mult, graph.degree, h, odo)
    _kernels.stabilize_fifo(graph.indptr, graph.indices, graph.mult, graph.degree,
                            active, h, odo)
    return h, odo


def stabilize_or_detect(g, c):
    """Stabilise on a sinkless graph, stopping as soon as every vertex has toppled."""
    if isinstance(g, SinkedGraph):
        raise TypeError("stabilize_or_detect works on sinkless graphs")
    h = as_config(g, c)
    odo = np.zeros_like(h)
    ok = _kernels.stabilize_or_detect(g.indptr, g.indices, g.mult, g.degree, h, odo)
    return StabilizeOutcome(bool(ok), h if ok else None, odo)


def add_and_stabilize(g, c, v, **kwargs):
    """``stabilize(g, c + 1_v)``."""
    if g.is_sink[v]:
        raise ValueError(f"vertex {v} is a sink")
    h = as_config(g, c)
    h[v] += 1
    return stabilize(g, h, **kwargs)


# --- accelerated start ---------------------------------------------------------

def _torsion_moduli(graph):
    rows = np.repeat(np.arange(graph.num_vertices), np.diff(graph.indptr))
    vals = np.where(graph.indices != rows, graph.mult, 0)
    out = np.zeros(graph.num_vertices, np.int64)
    nonempty = np.diff(graph.indptr) > 0
    out[nonempty] = np.gcd.reduceat(vals, graph.indptr[:-1][nonempty])
    out[out == 0] = 1
    return out


def odometer_lower_bound(g, c, refinements=6):
    """Integer vector ``v`` with ``0 <= v <= u`` where ``u`` is the true odometer of ``c``.

    Each non-sink height ends at most at ``t(x)``, the largest value below
    ``d_x`` congruent to ``c(x)`` modulo the gcd of the multiplicities at
    ``x`` (toppling only moves heights by such multiples).  Hence
    ``L u >= c - t`` on the non-sinks, and since the inverse of the reduced
    Laplacian is entrywise nonnegative, ``u >= phi = L^{-1}(c - t)``.  ``phi``
    is found by a sparse LU solve with exact-integer residual refinement,
    then lowered by a rigorous bound on the remaining solve error.

    Toppling ``v`` in bulk (heights may go negative) and then stabilising
    legally gives the same final configuration, with odometer ``v`` plus the
    legal part.
    """
    graph = g.graph
    idx = g.nonsinks
    h = np.asarray(c, dtype=np.int64)
    d = graph.degree[idx]
    mod = _torsion_moduli(graph)[idx]
    target = d - 1 - np.mod(d - 1 - h[idx], mod)
    b = h[idx] - target
    lap = graph.laplacian()[idx][:, idx].tocsc().astype(np.int64)
    lu = splu(lap.astype(np.float64))
    v = np.floor(lu.solve(b.astype(np.float64))).astype(np.int64)
    delta = np.zeros(len(idx))
    for _ in range(refinements):
        r = b - lap @ v
        delta = lu.solve(r.astype(np.float64))
        step = np.floor(delta).astype(np.int64)
        if not step.any():
            break
        v += step
        delta -= step
    r = b - lap @ v
    res = r - lap.astype(np.float64) @ delta
    slack = 1e-12 * (np.abs(r).max(initial=0) + 1) + np.abs(delta).max(initial=0) * 1e-12 * d.max()
    psi = lu.solve(np.ones(len(idx)))
    err = 2.0 * psi.max() * (np.abs(res).max(initial=0) + slack) + 1e-9
    low = v + np.floor(delta - err).astype(np.int64) - 1
    out = np.zeros(graph.num_vertices, np.int64)
    out[idx] = np.maximum(low, 0)
    return out


# --- recurrence ----------------------------------------------------------------

def _check_stable(g, h):
    bad = (~g.is_sink) & (h >= g.degree)
    if bad.any():
        raise ValueError(f"configuration is unstable at vertices {np.flatnonzero(bad)[:5].tolist()}")


def is_recurrent(g, c):
    """Burning test: fire every sink once and check that each non-sink topples exactly once."""
    h = as_config(g, c)
    _check_stable(g, h)
    h += g.sink_injection()
    _, odo = stabilize(g, h, accelerate=False)
    return bool(np.all(odo[g.nonsinks] == 1))


def enumerate_recurrent(g, budget=10**7):
    """All recurrent configurations, in mixed-radix lexicographic order over the non-sinks.

    Sink entries are zero.  Raises :class:`BudgetExceeded` when the number of
    stable configurations exceeds ``budget``.
    """
    idx = g.nonsinks
    radices = [int(g.degree[v]) for v in idx]
    total = prod(radices)
    if total > budget:
        raise BudgetExceeded(f"{total} stable configurations exceed the budget {budget}")
    out = []
    h = np.zeros(g.num_vertices, np.int64)
    for heights in itertools.product(*(range(r) for r in radices)):
        h[idx] = heights
        if is_recurrent(g, h):
            out.append(h.copy())
    return out


# --- exact counts ---------------------------------------------------------------

def _bareiss_det(rows):
    """Determinant of a square integer matrix (list of lists) by fraction-free elimination."""
    m = [list(map(int, r)) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def spanning_tree_count(g, collapse=()):
    """Number of spanning trees after merging the vertices in ``collapse`` into one.

    Exact integer determinant of the Laplacian with the merged vertex (or
    vertex 0 when ``collapse`` is empty) removed.
    """
    graph = g.graph if isinstance(g, SinkedGraph) else g
    if not graph.is_connected():
        raise ValueError("graph is disconnected")
    merged = sorted(set(int(v) for v in collapse)) or [0]
    keep = np.setdiff1d(np.arange(graph.num_vertices), merged)
    lap = graph.laplacian()[keep][:, keep].toarray()
    return _bareiss_det(lap.tolist())


def _edge_list(graph):
    """Edges with multiplicity expanded, loops included once each."""
    out = []
    for v, w, a in graph.edges():
        count = a // 2 if v == w else a
        out += [(v, w)] * count
    return out


def unicyclic_count(g, budget=24):
    """Connected spanning subgraphs with exactly ``|V|`` edges; parallel edges are distinct."""
    graph = g.graph if isinstance(g, SinkedGraph) else g
    edges = _edge_list(graph)
    if len(edges) > budget:
        raise BudgetExceeded(f"{len(edges)} edges exceed the brute-force budget {budget}")
    n = graph.num_vertices
    count = 0
    for subset in itertools.combinations(range(len(edges)), n):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = n
        for e in subset:
            a, b = find(edges[e][0]), find(edges[e][1])
            if a != b:
                parent[a] = b
                comps -= 1
        if comps == 1:
            count += 1
    return count


def mean_height(configs, sites):
    """Exact mean height over ``sites`` averaged uniformly over ``configs``."""
    total = sum(int(np.asarray(c)[sites].sum()) for c in configs)
    return Fraction(total, len(configs) * len(sites))
