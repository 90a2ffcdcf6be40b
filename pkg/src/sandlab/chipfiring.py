"""Parallel chip-firing (fixed-energy sandpile) and its orbit structure.

At every time step all unstable vertices topple once, simultaneously.  The
state space reachable from a configuration is finite, so every trajectory is
eventually periodic; :func:`find_orbit` locates the cycle exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .core import as_config
from .graph import MultiGraph, build_flower

__all__ = [
    "OrbitNotFound",
    "OrbitSummary",
    "parallel_step",
    "find_orbit",
    "orbit_states",
    "mirror",
    "flower_activity_from_RZ",
    "petal_invariant",
    "bracelet_parity",
    "FLOWER_ACTIVITIES",
]

FLOWER_ACTIVITIES = (Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1))


class OrbitNotFound(RuntimeError):
    """No repeated state was seen within the step budget."""

    def __init__(self, steps):
        super().__init__(f"no periodic orbit found within {steps} steps")
        self.steps = steps


@dataclass(frozen=True)
class OrbitSummary:
    """Eventual behaviour of a parallel chip-firing trajectory.

    Attributes
    ----------
    transient_steps : int
        Steps before the first state that lies on the cycle.
    period : int
    activity : Fraction
        Topplings during one period divided by ``period * |V|``.
    topples_per_period : ndarray
        Per-vertex topple counts over one period.
    """

    transient_steps: int
    period: int
    activity: Fraction
    topples_per_period: np.ndarray = field(repr=False)

    @property
    def per_site_topple_rate(self):
        return [Fraction(int(k), self.period) for k in self.topples_per_period]

    def to_record(self):
        return {
            "transient": self.transient_steps,
            "period": self.period,
            "activity_num": self.activity.numerator,
            "activity_den": self.activity.denominator,
        }

    def to_json(self):
        return json.dumps(self.to_record())


def _graph(g):
    if not isinstance(g, MultiGraph):
        raise TypeError("parallel chip-firing runs on a sinkless MultiGraph")
    return g


def parallel_step(g, c):
    """One synchronous step: every unstable vertex topples once."""
    g = _graph(g)
    h = as_config(g, c)
    out = np.empty_like(h)
    fired = np.zeros_like(h)
    _kernels.parallel_step(g.indptr, g.indices, g.mult, g.degree, h, out, fired)
    return out


class _Stepper:
    def __init__(self, g, budget):
        self.g = g
        self.budget = budget
        self.steps = 0
        self.fired = np.zeros(g.num_vertices, np.int64)

    def __call__(self, h):
        if self.steps >= self.budget:
            raise OrbitNotFound(self.budget)
        self.steps += 1
        out = np.empty_like(h)
        g = self.g
        _kernels.parallel_step(g.indptr, g.indices, g.mult, g.degree, h, out, self.fired)
        return out


def find_orbit(g, c, max_steps=None):
    """Transient length, period and exact activity of the trajectory from ``c``.

    Uses Brent's cycle detection with full-state comparison.  ``max_steps``
    bounds the total number of steps simulated (default ``16 |V| + 2**16``);
    :class:`OrbitNotFound` is raised when it runs out.
    """
    g = _graph(g)
    x0 = as_config(g, c)
    if max_steps is None:
        max_steps = 16 * g.num_vertices + 2**16
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    step = _Stepper(g, max_steps)

    power = lam = 1
    tortoise = x0
    hare = step(x0)
    while not np.array_equal(tortoise, hare):
        if power == lam:
            tortoise = hare
            power *= 2
            lam = 0
        hare = step(hare)
        lam += 1

    tortoise = x0
    hare = x0
    for _ in range(lam):
        hare = step(hare)
    mu = 0
    while not np.array_equal(tortoise, hare):
        tortoise = step(tortoise)
        hare = step(hare)
        mu += 1

    step.fired[:] = 0
    state = tortoise
    for _ in range(lam):
        state = step(state)
    fired = step.fired.copy()
    activity = Fraction(int(fired.sum()), lam * g.num_vertices)
    return OrbitSummary(mu, lam, activity, fired)


def orbit_states(g, c, summary):
    """The ``period`` configurations on the cycle, starting at step ``transient_steps``."""
    h = as_config(g, c)
    for _ in range(summary.transient_steps):
        h = parallel_step(g, h)
    out = []
    for _ in range(summary.period):
        out.append(h)
        h = parallel_step(g, h)
    return out


def mirror(g, c):
    """``2 d_x - 1 - c(x)`` at every vertex; requires ``c(x) <= 2 d_x - 1``."""
    h = as_config(g, c)
    top = 2 * g.degree - 1
    if np.any(h > top):
        raise ValueError("mirror needs every height at most 2 d_x - 1")
    return top - h


def flower_activity_from_RZ(n, R, Z):
    """Activity of parallel chip-firing on the flower with ``n`` petals.

    ``R`` is the total number of particles and ``Z`` the number of petals
    whose two heights agree modulo 3.
    """
    if not 0 <= Z <= n:
        raise ValueError("need 0 <= Z <= n")
    if R < 0:
        raise ValueError("R must be nonnegative")
    if R < 3 * n + Z:
        return Fraction(0)
    if R < 4 * n:
        return Fraction(1, 3)
    if R < 6 * n:
        return Fraction(1, 2)
    if R < 7 * n - Z:
        return Fraction(2, 3)
    return Fraction(1)


def _check_flower(g):
    n = (g.num_vertices - 1) // 2
    ok = g.num_vertices == 2 * n + 1 and n >= 1
    if ok:
        ok = (g.adjacency() != build_flower(n).adjacency()).nnz == 0
    if not ok:
        raise ValueError("graph is not a flower in canonical numbering")
    return n


def petal_invariant(g, c):
    """Return ``(Z, X)`` where ``X[k] = (c(2k+1) - c(2k+2)) mod 3`` and ``Z = #{k : X[k] = 0}``."""
    graph = getattr(g, "graph", g)
    _check_flower(graph)
    h = as_config(graph, c)
    x = np.mod(h[1::2] - h[2::2], 3)
    return int(np.count_nonzero(x == 0)), x


def bracelet_parity(c):
    """Heights modulo 2, a toppling invariant on the bracelet (all edges doubled)."""
    return np.mod(np.asarray(c, dtype=np.int64), 2)
