"""Multigraph containers and builders for every graph family in the lab.

Graphs are stored as compressed neighbour lists with multiplicities.  A loop
at ``v`` is stored as ``a[v, v] = 2`` (two half-edges), so ``d_v`` is always
the plain row sum of the multiplicities and a toppling of ``v`` returns
``a[v, v]`` particles to ``v`` itself.

Canonical vertex numbering
--------------------------
torus          row-major, ``(r, c) -> r * n + c``
bracelet/cycle ``0 .. n-1`` around the cycle, sink ``0``
flower         centre ``0``, petal ``k`` is ``(2k + 1, 2k + 2)``, sink petal ``0``
ladder         rung ``i`` is ``(2i, 2i + 1)``; sinks are the first and last rung
complete       ``0 .. n-1``, sink ``0``
lollipop       clique ``0 .. n-1``, path ``n-1, n, .., 2n-1``, sink ``2n-1``
wired tree     breadth-first from the root ``0``, collapsed sink is the last vertex
random regular ``0 .. n-1`` stands for the 1-based labels ``1 .. n``
"""

from __future__ import annotations

from collections import deque
from math import gcd
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .rng import as_generator

__all__ = [
    "MultiGraph",
    "SinkedGraph",
    "build_torus",
    "build_bracelet",
    "build_flower",
    "build_ladder",
    "build_circular_ladder",
    "build_complete",
    "build_lollipop",
    "build_cycle",
    "build_wired_tree",
    "build_random_regular",
    "build_family",
    "FAMILIES",
    "dumps",
    "loads",
    "save",
    "load",
]


class MultiGraph:
    """Finite undirected multigraph with loops.

    Parameters
    ----------
    indptr, indices, mult : array_like
        CSR-style neighbour lists.  Row ``v`` lists ``(w, a)`` pairs.  A
        neighbour may appear more than once in a row; repeated entries add up.
    family : str, optional
        Name of the builder that produced the graph.
    params : dict, optional
        Builder parameters, kept for provenance only.
    """

    def __init__(self, indptr, indices, mult, family="custom", params=None):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.mult = np.ascontiguousarray(mult, dtype=np.int64)
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValueError("malformed indptr")
        if len(self.indices) != len(self.mult):
            raise ValueError("indices and mult differ in length")
        if np.any(self.mult <= 0):
            raise ValueError("multiplicities must be positive")
        self.num_vertices = len(self.indptr) - 1
        if self.num_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        rows = np.repeat(np.arange(self.num_vertices), np.diff(self.indptr))
        self.degree = np.bincount(rows, weights=self.mult, minlength=self.num_vertices).astype(np.int64)
        self.family = family
        self.params = dict(params or {})
        for arr in (self.indptr, self.indices, self.mult, self.degree):
            arr.flags.writeable = False

    # construction helpers -------------------------------------------------

    @classmethod
    def from_edges(cls, num_vertices, edges, family="custom", params=None):
        """Build from ``(v, w, count)`` triples; a triple ``(v, v, k)`` adds ``k`` loops."""
        src, dst, cnt = [], [], []
        for v, w, k in edges:
            if not (0 <= v < num_vertices and 0 <= w < num_vertices):
                raise ValueError(f"edge ({v}, {w}) out of range")
            if k <= 0:
                continue
            if v == w:
                src.append(v), dst.append(v), cnt.append(2 * k)
            else:
                src += [v, w]
                dst += [w, v]
                cnt += [k, k]
        return cls._from_arcs(num_vertices, np.array(src, np.int64), np.array(dst, np.int64),
                              np.array(cnt, np.int64), family, params)

    @classmethod
    def from_neighbor_table(cls, table, family="custom", params=None, canonical=True):
        """Build from an ``(N, k)`` table whose row ``v`` lists the ``k`` edge ends at ``v``.

        A loop must appear twice in its row.  With ``canonical=False`` the
        table is used as-is (duplicates kept as separate unit entries), which
        avoids a sort on very large graphs.
        """
        table = np.asarray(table, dtype=np.int64)
        n, k = table.shape
        if not canonical:
            indptr = np.arange(0, n * k + 1, k, dtype=np.int64)
            return cls(indptr, table.ravel(), np.ones(n * k, np.int64), family, params)
        src = np.repeat(np.arange(n, dtype=np.int64), k)
        return cls._from_arcs(n, src, table.ravel(), np.ones(n * k, np.int64), family, params)

    @classmethod
    def _from_arcs(cls, n, src, dst, cnt, family, params):
        mat = sp.coo_array((cnt, (src, dst)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        mat.sort_indices()
        return cls(mat.indptr, mat.indices, mat.data, family, params)

    # queries ----------------------------------------------------------------

    def neighbors(self, v):
        """Return ``(w, a_vw)`` arrays for vertex ``v`` (``w`` may include ``v``)."""
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.indices[lo:hi], self.mult[lo:hi]

    def adjacency(self):
        """Symmetric sparse matrix of multiplicities ``a[v, w]`` (loops stored as 2 per loop)."""
        mat = sp.csr_array((self.mult, self.indices, self.indptr),
                           shape=(self.num_vertices, self.num_vertices))
        mat = mat.copy()
        mat.sum_duplicates()
        return mat

    def laplacian(self):
        """Graph Laplacian ``D - A`` as a sparse int64 matrix (toppling ``v`` adds ``-L[:, v]``)."""
        return (sp.diags_array(self.degree) - self.adjacency()).tocsr()

    def multiplicity(self, v, w):
        ws, a = self.neighbors(v)
        return int(a[ws == w].sum())

    def edges(self):
        """Yield ``(v, w, a_vw)`` for ``v <= w`` with ``a_vw > 0``."""
        adj = sp.triu(self.adjacency()).tocoo()
        order = np.lexsort((adj.col, adj.row))
        for r, c, a in zip(adj.row[order], adj.col[order], adj.data[order]):
            yield int(r), int(c), int(a)

    @property
    def num_edges(self):
        """Edge count with multiplicity; each loop counts once."""
        adj = self.adjacency()
        return int((adj.sum() + adj.diagonal().sum() // 2) // 2)

    @property
    def max_degree(self):
        return int(self.degree.max())

    def has_loops(self):
        return bool(self.adjacency().diagonal().any())

    def is_connected(self):
        seen = np.zeros(self.num_vertices, bool)
        seen[0] = True
        todo = deque([0])
        while todo:
            v = todo.popleft()
            for w in self.indices[self.indptr[v]:self.indptr[v + 1]]:
                if not seen[w]:
                    seen[w] = True
                    todo.append(w)
        return bool(seen.all())

    def check_invariants(self):
        """Raise ``AssertionError`` unless symmetric, degree-consistent and connected."""
        adj = self.adjacency()
        assert (adj != adj.T).nnz == 0, "multiplicities not symmetric"
        assert np.array_equal(np.asarray(adj.sum(axis=1)).ravel(), self.degree), "degree mismatch"
        assert np.all(adj.diagonal() % 2 == 0), "odd loop half-edge count"
        assert self.is_connected(), "graph is disconnected"

    def torsion_modulus(self, v):
        """gcd of the multiplicities joining ``v`` to other vertices.

        Every toppling changes ``eta(v)`` by a multiple of this number, so
        ``eta(v)`` modulo it is conserved.
        """
        ws, a = self.neighbors(v)
        g = 0
        for x in a[ws != v]:
            g = gcd(g, int(x))
        return g or 1

    def __repr__(self):
        return f"MultiGraph(family={self.family!r}, n={self.num_vertices}, edges={self.num_edges})"


class SinkedGraph:
    """A :class:`MultiGraph` together with a nonempty set of sink vertices."""

    def __init__(self, graph, sinks):
        sinks = sorted({int(s) for s in sinks})
        if not sinks:
            raise ValueError("sink set must be nonempty")
        if sinks[0] < 0 or sinks[-1] >= graph.num_vertices:
            raise ValueError("sink out of range")
        self.graph = graph
        self.sinks = tuple(sinks)
        self.is_sink = np.zeros(graph.num_vertices, bool)
        self.is_sink[sinks] = True
        self.nonsinks = np.flatnonzero(~self.is_sink)
        self.is_sink.flags.writeable = False
        self.nonsinks.flags.writeable = False

    @property
    def num_vertices(self):
        return self.graph.num_vertices

    @property
    def degree(self):
        return self.graph.degree

    @property
    def family(self):
        return self.graph.family

    def sink_injection(self):
        """Particles each vertex receives when every sink fires once (``sum_s Delta_s`` off the sinks)."""
        out = np.zeros(self.num_vertices, np.int64)
        for s in self.sinks:
            ws, a = self.graph.neighbors(s)
            np.add.at(out, ws, a)
        out[self.is_sink] = 0
        return out

    def __repr__(self):
        return f"SinkedGraph({self.graph!r}, sinks={list(self.sinks)})"


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


def build_torus(n):
    """``n x n`` torus, 4-regular.  ``n = 1`` gives two loops, ``n = 2`` doubled edges."""
    _require(n >= 1, "torus needs n >= 1")
    r, c = np.divmod(np.arange(n * n), n)
    table = np.stack([((r + 1) % n) * n + c, ((r - 1) % n) * n + c,
                      r * n + (c + 1) % n, r * n + (c - 1) % n], axis=1)
    return MultiGraph.from_neighbor_table(table, "torus", {"n": n})


def _cycle_edges(n, mult):
    return [(i, (i + 1) % n, mult) for i in range(n)]


def build_cycle(n, with_sink=False):
    _require(n >= 3, "cycle needs n >= 3")
    g = MultiGraph.from_edges(n, _cycle_edges(n, 1), "cycle", {"n": n})
    return SinkedGraph(g, [0]) if with_sink else g


def build_bracelet(n, with_sink=False):
    """Cycle ``Z_n`` with every edge doubled; sink ``0`` when requested."""
    _require(n >= 3, "bracelet needs n >= 3")
    g = MultiGraph.from_edges(n, _cycle_edges(n, 2), "bracelet", {"n": n})
    return SinkedGraph(g, [0]) if with_sink else g


def build_flower(n, with_sink=False):
    """Centre ``0`` plus ``n`` triangular petals ``(2k+1, 2k+2)``."""
    _require(n >= (2 if with_sink else 1), "flower too small")
    edges = []
    for k in range(n):
        a, b = 2 * k + 1, 2 * k + 2
        edges += [(0, a, 1), (0, b, 1), (a, b, 1)]
    g = MultiGraph.from_edges(2 * n + 1, edges, "flower", {"n": n})
    return SinkedGraph(g, [1, 2]) if with_sink else g


def _ladder_edges(n, periodic):
    edges = [(2 * i, 2 * i + 1, 1) for i in range(n)]
    last = n if periodic else n - 1
    for i in range(last):
        j = (i + 1) % n
        edges += [(2 * i, 2 * j, 1), (2 * i + 1, 2 * j + 1, 1)]
    return edges


def build_ladder(n):
    """``n``-rung ladder with the two end rungs (4 vertices) as sinks."""
    _require(n >= 3, "ladder needs n >= 3 rungs")
    g = MultiGraph.from_edges(2 * n, _ladder_edges(n, False), "ladder", {"n": n})
    return SinkedGraph(g, [0, 1, 2 * n - 2, 2 * n - 1])


def build_circular_ladder(n):
    """Sinkless 3-regular ladder with the rails closed into cycles (fixed-energy runs)."""
    _require(n >= 3, "circular ladder needs n >= 3 rungs")
    return MultiGraph.from_edges(2 * n, _ladder_edges(n, True), "circular-ladder", {"n": n})


def build_complete(n, with_sink=False):
    _require(n >= 2, "complete graph needs n >= 2")
    edges = [(v, w, 1) for v in range(n) for w in range(v + 1, n)]
    g = MultiGraph.from_edges(n, edges, "complete", {"n": n})
    return SinkedGraph(g, [0]) if with_sink else g


def build_lollipop(n):
    """``K_n`` with a pendant path of ``n`` edges; the far end of the path is the sink."""
    _require(n >= 2, "lollipop needs n >= 2")
    edges = [(v, w, 1) for v in range(n) for w in range(v + 1, n)]
    edges += [(v, v + 1, 1) for v in range(n - 1, 2 * n - 1)]
    g = MultiGraph.from_edges(2 * n, edges, "lollipop", {"n": n})
    return SinkedGraph(g, [2 * n - 1])


def build_wired_tree(q, depth):
    """Ball of radius ``depth`` in the ``(q+1)``-regular tree, boundary glued into one sink."""
    _require(q >= 2 and depth >= 1, "wired tree needs q >= 2 and depth >= 1")
    sizes = [1] + [(q + 1) * q ** (k - 1) for k in range(1, depth)]
    n_inner = sum(sizes)
    sink = n_inner
    edges = []
    start = [0]
    for k in range(1, depth):
        start.append(start[-1] + sizes[k - 1])
    for k in range(depth):
        branching = q + 1 if k == 0 else q
        for i in range(sizes[k]):
            v = start[k] + i
            if k == depth - 1:
                edges.append((v, sink, branching))
            else:
                first = start[k + 1] + i * branching
                edges += [(v, first + j, 1) for j in range(branching)]
    g = MultiGraph.from_edges(n_inner + 1, edges, "wired-tree", {"q": q, "depth": depth})
    return SinkedGraph(g, [sink])


def random_cyclic_permutation(m, gen):
    """Uniform permutation of ``range(m)`` with a single cycle (``(m-1)!`` outcomes)."""
    order = gen.permutation(m)
    pi = np.empty(m, np.int64)
    pi[order] = np.roll(order, -1)
    return pi


def build_random_regular(q, n, rng):
    """Connected ``(q+1)``-regular bipartite multigraph on ``n`` vertices.

    ``M0`` joins 1-based labels ``(2i-1, 2i)``.  Each of the ``q`` further
    matchings joins even label ``2i`` to odd label ``2 pi(i) - 1`` for a
    uniformly random single-cycle permutation ``pi`` of the ``n/2`` pairs,
    which is exactly a uniform matching whose union with ``M0`` is a
    Hamiltonian cycle.
    """
    _require(n % 2 == 0, "random regular graph needs even n")
    _require(n >= 4, "random regular graph needs n >= 4")
    _require(q >= 1, "need q >= 1")
    gen = as_generator(rng)
    m = n // 2
    table = np.empty((n, q + 1), np.int64)
    vertices = np.arange(n)
    table[:, 0] = vertices ^ 1
    for j in range(1, q + 1):
        pi = random_cyclic_permutation(m, gen)
        table[1::2, j] = 2 * pi
        table[2 * pi, j] = 2 * np.arange(m) + 1
    return MultiGraph.from_neighbor_table(table, "random-regular", {"q": q, "n": n}, canonical=False)


FAMILIES = ("torus", "cycle", "bracelet", "flower", "ladder", "circular-ladder",
            "complete", "lollipop", "wired-tree", "random-regular")


def build_family(family, n, with_sink=False, q=2, rng=None):
    """Dispatch to a builder by family name.

    ``n`` is the size parameter of the family (the depth for the wired
    tree).  Ladder, lollipop and wired tree always carry their sinks;
    circular ladder, torus and random regular graphs never do.
    """
    if family == "torus":
        return build_torus(n)
    if family == "cycle":
        return build_cycle(n, with_sink)
    if family == "bracelet":
        return build_bracelet(n, with_sink)
    if family == "flower":
        return build_flower(n, with_sink)
    if family == "complete":
        return build_complete(n, with_sink)
    if family == "ladder":
        return build_ladder(n) if with_sink else build_circular_ladder(n)
    if family == "circular-ladder":
        return build_circular_ladder(n)
    if family == "lollipop":
        return build_lollipop(n)
    if family == "wired-tree":
        return build_wired_tree(q, n)
    if family == "random-regular":
        return build_random_regular(q, n, rng)
    raise ValueError(f"unknown graph family {family!r}")


# --- plain-text serialisation -------------------------------------------------

def dumps(g):
    """Text form: ``n <N>``, one ``v w a_vw`` line per pair ``v <= w``, then ``sinks ...``."""
    graph, sinks = (g.graph, g.sinks) if isinstance(g, SinkedGraph) else (g, ())
    lines = [f"n {graph.num_vertices}"]
    lines += [f"{v} {w} {a}" for v, w, a in graph.edges()]
    lines.append(" ".join(["sinks", *map(str, sinks)]))
    return "\n".join(lines) + "\n"


def loads(text):
    """Inverse of :func:`dumps`.  Returns a SinkedGraph when the sink line is nonempty."""
    n = None
    sinks = []
    src, dst, cnt = [], [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n":
            n = int(parts[1])
        elif parts[0] == "sinks":
            sinks = [int(x) for x in parts[1:]]
        else:
            v, w, a = map(int, parts)
            if n is None:
                raise ValueError("edge line before header")
            if v == w:
                src.append(v), dst.append(v), cnt.append(a)
            else:
                src += [v, w]
                dst += [w, v]
                cnt += [a, a]
    if n is None:
        raise ValueError("missing 'n' header")
    g = MultiGraph._from_arcs(n, np.array(src, np.int64), np.array(dst, np.int64),
                              np.array(cnt, np.int64), "custom", None)
    return SinkedGraph(g, sinks) if sinks else g


def save(g, path):
    Path(path).write_text(dumps(g))


def load(path):
    return loads(Path(path).read_text())
