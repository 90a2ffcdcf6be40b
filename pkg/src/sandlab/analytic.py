"""Closed-form densities, transcendental thresholds and exact combinatorial laws.

Everything here is deterministic.  Root finding uses bisection on a
bracketing interval followed by Newton polishing; rational quantities are
returned as :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .core import spanning_tree_count, unicyclic_count
from .graph import SinkedGraph

__all__ = [
    "p_odd",
    "pair_density",
    "find_root",
    "bracelet_zeta_c",
    "bracelet_rho",
    "flower_zeta_c",
    "flower_zeta_c_prime",
    "flower_rho",
    "flower_prob_X0",
    "markov_prob_X0",
    "cycle_rho",
    "cayley_height_dist",
    "cayley_zeta_s",
    "LadderLaw",
    "LADDER_MATRIX",
    "LADDER_STATES",
    "ladder_stationary",
    "tutte_zeta_s",
    "DensityLaw",
    "density_law",
    "reference_constants",
    "summary_table",
]

SQRT3 = math.sqrt(3.0)


def _check_lambda(lam):
    if not (lam >= 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be finite and nonnegative, got {lam}")


def p_odd(lam):
    """Probability that a Poisson(lam) variable is odd: ``(1 - e^{-2 lam}) / 2``."""
    _check_lambda(lam)
    return 0.5 * (1.0 - math.exp(-2.0 * lam))


def pair_density(lam):
    """Mean number of particle pairs per site, ``(lam - p_odd(lam)) / 2``."""
    return 0.5 * (lam - p_odd(lam))


# --- roots -----------------------------------------------------------------

def find_root(f, df, lo=0.0, hi=10.0, tol=1e-13):
    """Unique root of ``f`` on ``[lo, hi]`` (sign change required), polished by Newton."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError("root is not bracketed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo < 1e-15:
            break
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(8):
        slope = df(x)
        if slope == 0:
            break
        nxt = x - f(x) / slope
        if abs(f(nxt)) >= abs(f(x)):
            break
        x = nxt
    if abs(f(x)) > tol:
        raise ArithmeticError(f"root residual {abs(f(x)):.3g} above {tol}")
    return x


def _bracelet_f(z):
    return z - 2.5 + 0.5 * math.exp(-2.0 * z)


def _flower_f(z):
    return z - 5.0 / 3.0 - math.exp(-3.0 * z) / 3.0


def _flower_f_prime_eq(z):
    return z - 10.0 / 3.0 + math.exp(-3.0 * z) / 3.0


ROOT_EQUATIONS = {
    "bracelet_zeta_c": (_bracelet_f, lambda z: 1.0 - math.exp(-2.0 * z)),
    "flower_zeta_c": (_flower_f, lambda z: 1.0 + math.exp(-3.0 * z)),
    "flower_zeta_c_prime": (_flower_f_prime_eq, lambda z: 1.0 - math.exp(-3.0 * z)),
}


def bracelet_zeta_c():
    """Root of ``zeta = 5/2 - e^{-2 zeta} / 2`` (about 2.496608)."""
    return find_root(*ROOT_EQUATIONS["bracelet_zeta_c"])


def flower_zeta_c():
    """Root of ``zeta = 5/3 + e^{-3 zeta} / 3`` (about 1.6688976)."""
    return find_root(*ROOT_EQUATIONS["flower_zeta_c"])


def flower_zeta_c_prime():
    """Positive root of ``zeta = 10/3 - e^{-3 zeta} / 3`` (about 3.3333182)."""
    return find_root(*ROOT_EQUATIONS["flower_zeta_c_prime"])


def bracelet_rho(lam):
    """Final density on the sinked bracelet started from Poisson(lam): ``min(lam, (5 - e^{-2 lam}) / 2)``."""
    _check_lambda(lam)
    return min(lam, 0.5 * (5.0 - math.exp(-2.0 * lam)))


def flower_rho(lam):
    """Final density on the sinked flower: ``min(lam, 5/3 + e^{-3 lam} / 3)``."""
    _check_lambda(lam)
    return min(lam, 5.0 / 3.0 + math.exp(-3.0 * lam) / 3.0)


def cycle_rho(lam):
    """Final density on the sinked cycle: ``min(lam, 1)``."""
    _check_lambda(lam)
    return min(lam, 1.0)


def flower_prob_X0(lam):
    """Probability that the two heights of a Poisson(lam) petal agree mod 3: ``(1 + 2 e^{-3 lam}) / 3``."""
    _check_lambda(lam)
    return (1.0 + 2.0 * math.exp(-3.0 * lam)) / 3.0


_P_PETAL = np.array([[0.0, 0.5], [1.0, 0.5]])


def markov_prob_X0(lam):
    """Same probability as :func:`flower_prob_X0`, via ``exp(2 lam (P - I)) e_1``.

    The petal difference mod 3 is a continuous-time chain on ``{0, +-1}``
    driven by particle arrivals at total rate 2.
    """
    _check_lambda(lam)
    vec = expm(2.0 * lam * (_P_PETAL - np.eye(2))) @ np.array([1.0, 0.0])
    return float(vec[0])


# --- Cayley tree ---------------------------------------------------------------

def cayley_height_dist(q):
    """Stationary height law at the root of the wired ``(q+1)``-regular tree, as Fractions."""
    if q < 2:
        raise ValueError("need q >= 2")
    norm = (q * q - 1) * q**q
    out = []
    acc = 0
    for i in range(q + 1):
        acc += math.comb(q + 1, i) * (q - 1) ** (q + 1 - i)
        out.append(Fraction(acc, norm))
    return out


def cayley_zeta_s(q):
    dist = cayley_height_dist(q)
    return sum((i * p for i, p in enumerate(dist)), Fraction(0))


# --- ladder -------------------------------------------------------------------

LADDER_STATES = ("(3,3)", "(3,2)", "(2,3)", "(3,1)", "(1,3)", "bar(3,2)", "bar(2,3)")
# rung heights (left, right) for each state; each entry is the state label minus one
_LADDER_HEIGHTS = ((2, 2), (2, 1), (1, 2), (2, 0), (0, 2), (2, 1), (1, 2))

LADDER_MATRIX = np.array([
    [1, 1, 1, 1, 1, 0, 0],
    [1, 1, 1, 1, 1, 0, 0],
    [1, 1, 1, 1, 1, 0, 0],
    [1, 0, 0, 0, 0, 1, 0],
    [1, 0, 0, 0, 0, 0, 1],
    [1, 0, 0, 0, 0, 1, 0],
    [1, 0, 0, 0, 0, 0, 1],
], dtype=np.int64)


@dataclass(frozen=True)
class LadderLaw:
    transfer_matrix: np.ndarray
    perron_value: float
    left_vec: np.ndarray
    right_vec: np.ndarray
    state_probs: np.ndarray
    height_probs: np.ndarray
    zeta_s: float

    def parry_transition(self):
        """Transition matrix ``P_ij = A_ij r_j / (lambda r_i)`` of the maximal-entropy chain."""
        a = self.transfer_matrix.astype(float)
        r = self.right_vec
        return a * r[None, :] / (self.perron_value * r[:, None])


def _power_iteration(mat, tol=1e-12, max_iter=10000):
    x = np.ones(mat.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        y = mat @ x
        lam = y.max()
        y /= lam
        if np.abs(mat @ y - lam * y).max() < tol:
            return lam, y
        x = y
    raise ArithmeticError("power iteration did not converge")


def ladder_stationary():
    """Perron data, Parry state law and per-site height law for the two-leg ladder."""
    a = LADDER_MATRIX.astype(float)
    lam_r, right = _power_iteration(a)
    lam_l, left = _power_iteration(a.T)
    perron = 0.5 * (lam_r + lam_l)
    # normalise to the closed forms (last coordinate 1) for readability
    right = right / right[-1]
    left = left / left[-1]
    weights = left * right
    probs = weights / weights.sum()
    heights = np.zeros(3)
    for p, (hl, hr) in zip(probs, _LADDER_HEIGHTS):
        heights[hl] += 0.5 * p
        heights[hr] += 0.5 * p
    zeta = float(np.dot(np.arange(3), heights))
    return LadderLaw(LADDER_MATRIX.copy(), float(perron), left, right, probs, heights, zeta)


LADDER_CLOSED_FORM = {
    "perron_value": 2.0 + SQRT3,
    "right_vec": np.array([1 + SQRT3, 1 + SQRT3, 1 + SQRT3, 1, 1, 1, 1]),
    "left_vec": np.array([3 + SQRT3, 1 + SQRT3, 1 + SQRT3, 1 + SQRT3, 1 + SQRT3, 1, 1]),
    "height_probs": np.array([-0.5 + SQRT3 / 3, 1.25 - 7 * SQRT3 / 12, 0.25 + SQRT3 / 4]),
    "zeta_s": 1.75 - SQRT3 / 12,
}


# --- Tutte route ------------------------------------------------------------------

def tutte_zeta_s(g, sink=0):
    """Stationary density with a single sink from spanning-tree and unicyclic counts.

    Returns ``(per_vertex, per_nonsink)``: the sum of recurrent heights
    averaged over all ``n`` vertices and over the ``n - 1`` non-sinks.
    """
    graph = g.graph if isinstance(g, SinkedGraph) else g
    if graph.has_loops():
        raise ValueError("the unicyclic route needs a loopless graph")
    n = graph.num_vertices
    m = graph.num_edges
    d = int(graph.degree[sink])
    kappa = spanning_tree_count(graph)
    u = unicyclic_count(graph)
    excess = Fraction((m - d) * kappa + u, kappa)
    return excess / n, excess / (n - 1)


# --- summary -------------------------------------------------------------------

@dataclass(frozen=True)
class DensityLaw:
    family: str
    zeta_s: float
    zeta_c: float
    rho_of_lambda: Callable[[float], float] | None = None
    zeta_c_prime: float | None = None
    zeta_s_exact: bool = True
    zeta_c_exact: bool = True


def density_law(family, q=None):
    """Stationary/threshold densities for a family name."""
    if family in ("cycle", "line"):
        return DensityLaw("cycle", 1.0, 1.0, cycle_rho)
    if family == "bracelet":
        return DensityLaw("bracelet", 2.5, bracelet_zeta_c(), bracelet_rho)
    if family == "flower":
        return DensityLaw("flower", 5.0 / 3.0, flower_zeta_c(), flower_rho, flower_zeta_c_prime())
    if family == "ladder":
        return DensityLaw("ladder", LADDER_CLOSED_FORM["zeta_s"], 1.6082, zeta_c_exact=False)
    if family == "torus":
        return DensityLaw("torus", 17 / 8, 2.125288, zeta_s_exact=False, zeta_c_exact=False)
    if family in ("wired-tree", "random-regular"):
        q = 2 if q is None else q
        empirical = {2: 1.5, 3: 2.00041, 4: 2.51167}
        return DensityLaw(family, float(cayley_zeta_s(q)), empirical.get(q, float("nan")),
                          zeta_c_exact=False)
    raise KeyError(f"no density law for family {family!r}")


def reference_constants():
    """Reference values with an exactness label: exact, conjectural, empirical or asymptotic."""
    pi = math.pi
    return [
        {"name": "zeta_s(Z^2)", "value": 17 / 8, "kind": "conjectural"},
        {"name": "Z^2 Pr[h=0]", "value": 2 / pi**2 - 4 / pi**3, "kind": "exact"},
        # -3/pi^2 makes the four probabilities sum to 1 with mean 17/8
        {"name": "Z^2 Pr[h=1]", "value": 0.25 - 1 / (2 * pi) - 3 / pi**2 + 12 / pi**3, "kind": "conjectural"},
        {"name": "Z^2 Pr[h=2]", "value": 3 / 8 + 1 / pi - 12 / pi**3, "kind": "conjectural"},
        {"name": "Z^2 Pr[h=3]", "value": 3 / 8 - 1 / (2 * pi) + 1 / pi**2 + 4 / pi**3, "kind": "conjectural"},
        {"name": "zeta_c(Z^2)", "value": 2.125288, "kind": "empirical"},
        {"name": "zeta_c(Z^2) fit intercept", "value": 2.1252881, "kind": "empirical"},
        {"name": "zeta_c(Z_64^2)", "value": 2.1249561, "kind": "empirical"},
        {"name": "zeta_c(Z_256^2)", "value": 2.1252572, "kind": "empirical"},
        {"name": "Z_64^2 threshold marginals", "value": [0.073555, 0.173966, 0.306447, 0.446032],
         "kind": "empirical"},
        {"name": "Wright constant sqrt(pi/8)", "value": math.sqrt(pi / 8), "kind": "exact"},
        {"name": "zeta_s(K_n) ~ n/2 + sqrt(pi/8) sqrt(n)", "value": "n/2 + 0.6267 sqrt(n)", "kind": "asymptotic"},
        {"name": "zeta_s(lollipop_n) ~ n/4", "value": "n/4 + O(sqrt(n))", "kind": "asymptotic"},
        {"name": "zeta_c(ladder)", "value": 1.6082, "kind": "empirical"},
        {"name": "zeta_c(4-regular tree)", "value": 2.00041, "kind": "empirical"},
        {"name": "zeta_c(5-regular tree)", "value": 2.51167, "kind": "empirical"},
    ]


def summary_table():
    """Rows ``(graph, zeta_s, zeta_s_exact, zeta_c, zeta_c_exact)`` for the known families."""
    rows = [
        ("Z", "1", True, "1", True),
        ("Z^2", "17/8", False, f"{2.125288:.6f}", False),
        ("bracelet", "5/2", True, f"{bracelet_zeta_c():.6f}", True),
        ("flower", "5/3", True, f"{flower_zeta_c():.6f}", True),
        ("ladder", f"{LADDER_CLOSED_FORM['zeta_s']:.6f}", True, "1.6082", False),
        ("complete", "n/2 + O(sqrt(n))", False, "n - O(sqrt(n log n))", False),
    ]
    for q, zc in ((2, "1.50000"), (3, "2.00041"), (4, "2.51167")):
        rows.append((f"{q + 1}-regular tree", str(cayley_zeta_s(q)), True, zc, False))
    return rows
