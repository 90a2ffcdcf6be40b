"""Seeded stochastic experiments.

* threshold trials: add particles at uniform random sites of a sinkless
  graph until an addition makes every vertex topple;
* stationary sampling of the driven dissipative chain on a sinked graph;
* density response: stabilise a Poisson(lambda) pile on a sinked graph;
* activity response: run parallel chip-firing from a Poisson(lambda) pile.

Trial ``i`` always draws from ``RngStream(seed, i)`` and results are reduced
in trial order, so the output does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import numpy as np

from . import _kernels
from .chipfiring import OrbitNotFound, find_orbit, petal_invariant, flower_activity_from_RZ
from .core import is_recurrent, stabilize
from .graph import MultiGraph, SinkedGraph, build_family
from .rng import RngStream, as_generator

__all__ = [
    "HIST_BUCKETS",
    "Estimate",
    "TrialResult",
    "ThresholdSummary",
    "BurnInPolicy",
    "StationaryEstimate",
    "poisson_sample",
    "poisson_config",
    "threshold_trial",
    "threshold_estimate",
    "stationary_sample",
    "stationary_density_estimate",
    "density_response",
    "activity_response",
    "write_trials_csv",
    "threshold_summary_json",
]

# heights 0..6 get their own bucket, 7 and above are pooled
HIST_BUCKETS = 8
HIST_LABELS = [f"h{i}" for i in range(HIST_BUCKETS - 1)] + [f"h{HIST_BUCKETS - 1}plus"]


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_trials: int

    @classmethod
    def from_samples(cls, values):
        x = np.asarray(values, dtype=float)
        if x.size < 2:
            raise ValueError("an estimate needs at least two samples")
        mean = math.fsum(x) / x.size
        var = math.fsum((x - mean) ** 2) / (x.size - 1)
        return cls(mean, math.sqrt(var / x.size), int(x.size))

    def deviation(self, value):
        """Distance from ``value`` in standard errors."""
        return (self.mean - value) / self.stderr if self.stderr > 0 else math.inf * (self.mean != value)

    def __str__(self):
        return f"{self.mean:.7f} +- {self.stderr:.7f} (n={self.n_trials})"


@dataclass(frozen=True)
class TrialResult:
    """One threshold trial.

    ``m`` is the number of particles in the last stable configuration and
    ``height_histogram`` counts its heights (last bucket pools heights >= 7).
    ``total_topples`` counts topplings used to stabilise those ``m`` particles.
    """

    m: int
    n_sites: int
    height_histogram: np.ndarray
    total_topples: int
    stream_id: int = 0

    @property
    def density(self):
        return Fraction(self.m, self.n_sites)


def _check_lambda(lam):
    if not (lam >= 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be finite and nonnegative, got {lam}")


def poisson_sample(lam, rng):
    """One Poisson(lam) draw."""
    _check_lambda(lam)
    return int(as_generator(rng).poisson(lam))


def poisson_config(lam, size, rng):
    _check_lambda(lam)
    return as_generator(rng).poisson(lam, size=size).astype(np.int64)


def _histogram(h):
    return np.bincount(np.minimum(h, HIST_BUCKETS - 1), minlength=HIST_BUCKETS).astype(np.int64)


# --- threshold protocol -----------------------------------------------------------

def threshold_trial(g, rng, stream_id=0):
    """Run the threshold protocol once on the sinkless graph ``g``.

    ``g`` may also be a callable ``g(generator) -> MultiGraph`` so that a
    fresh random graph is drawn from the trial's own stream.
    """
    gen = as_generator(rng)
    if not isinstance(g, MultiGraph):
        g = g(gen)
    n = g.num_vertices
    s = -g.degree.astype(np.int64)
    state = np.zeros(3, np.int64)
    queue = np.empty(n, np.int64)
    tstamp = np.zeros(n, np.int64)
    tlist = np.empty(n, np.int64)
    tcount = np.zeros(n, np.int64)
    chunk = max(4096, 2 * n)
    while True:
        sites = gen.integers(0, n, size=chunk, dtype=np.int64)
        _, failed = _kernels.threshold_additions(g.indptr, g.indices, g.mult, g.degree, s, sites, 0,
                                                 state, queue, tstamp, tlist, tcount)
        if failed:
            break
    return TrialResult(int(state[0]), n, _histogram(s + g.degree), int(state[1]), stream_id)


def _threshold_job(g, seed, stream_id):
    return threshold_trial(g, RngStream(seed, stream_id), stream_id)


@dataclass(frozen=True)
class ThresholdSummary:
    estimate: Estimate
    marginals: np.ndarray
    mean_topples: float
    trials: list = field(repr=False)


def _map_trials(job, ids, workers):
    if workers is None:
        workers = int(os.environ.get("SANDLAB_WORKERS", "1"))
    if workers <= 1:
        return [job(i) for i in ids]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, ids, chunksize=max(1, len(ids) // (8 * workers))))


def threshold_estimate(g, n_trials, seed=0, workers=None, first_stream=0):
    """Average the threshold density over ``n_trials`` independent trials.

    Trial ``i`` uses stream ``first_stream + i``.  Results are reduced in
    stream order, so the summary is identical for any number of workers.
    """
    if n_trials < 2:
        raise ValueError("need at least two trials")
    ids = list(range(first_stream, first_stream + n_trials))
    trials = _map_trials(partial(_threshold_job, g, seed), ids, workers)
    est = Estimate.from_samples([t.m / t.n_sites for t in trials])
    marg = np.array([math.fsum(t.height_histogram[k] / t.n_sites for t in trials) / n_trials
                     for k in range(HIST_BUCKETS)])
    topples = math.fsum(t.total_topples for t in trials) / n_trials
    return ThresholdSummary(est, marg, topples, trials)


# --- driven dissipative chain ------------------------------------------------------

@dataclass(frozen=True)
class BurnInPolicy:
    """How long to run the driven chain.

    The chain starts from the empty configuration (or the maximal stable one
    with ``start="max"``).  Every ``check_every`` additions (default
    ``|V'|``) the burning test is run; once it passes, ``factor * |V'|``
    more additions are made before the state is returned.
    """

    factor: int = 8
    check_every: int | None = None
    start: str = "empty"
    max_checks: int = 10**6


def _driven(g, h, sites, queue, active):
    gr = g.graph
    return _kernels.driven_additions(gr.indptr, gr.indices, gr.mult, gr.degree, active, h, sites, queue)


def stationary_sample(g, rng, policy=BurnInPolicy()):
    """Run the driven chain on ``g`` and return a (recurrent) configuration."""
    gen = as_generator(rng)
    idx = g.nonsinks
    n_active = idx.size
    active = ~g.is_sink
    queue = np.empty(g.num_vertices, np.int64)
    h = np.zeros(g.num_vertices, np.int64)
    if policy.start == "max":
        h[idx] = g.degree[idx] - 1
    elif policy.start != "empty":
        raise ValueError(f"unknown start {policy.start!r}")
    step = policy.check_every or n_active
    checks = 0
    while not is_recurrent(g, np.where(active, h, 0)):
        checks += 1
        if checks > policy.max_checks:
            raise RuntimeError("driven chain did not reach a recurrent state")
        _driven(g, h, idx[gen.integers(0, n_active, size=step)], queue, active)
    _driven(g, h, idx[gen.integers(0, n_active, size=policy.factor * n_active)], queue, active)
    h[g.is_sink] = 0
    return h


@dataclass(frozen=True)
class StationaryEstimate:
    per_nonsink: Estimate
    per_vertex: Estimate
    marginals: np.ndarray
    site_mean: Estimate


def _stationary_job(g, seed, policy, stream_id):
    return stationary_sample(g, RngStream(seed, stream_id), policy)


def stationary_density_estimate(g, n_samples, seed=0, policy=BurnInPolicy(), sites=None, workers=None):
    """Mean height from independent stationary samples.

    ``per_nonsink`` divides the total by ``|V'|``, ``per_vertex`` by ``|V|``.
    ``marginals`` and ``site_mean`` are computed over ``sites`` (default all
    non-sinks).
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    sites = g.nonsinks if sites is None else np.asarray(sites)
    samples = _map_trials(partial(_stationary_job, g, seed, policy), list(range(n_samples)), workers)
    totals = np.array([s[g.nonsinks].sum() for s in samples], dtype=float)
    marg = np.mean([_histogram(s[sites]) / sites.size for s in samples], axis=0)
    return StationaryEstimate(
        Estimate.from_samples(totals / g.nonsinks.size),
        Estimate.from_samples(totals / g.num_vertices),
        marg,
        Estimate.from_samples([s[sites].mean() for s in samples]),
    )


# --- response curves -----------------------------------------------------------

def _stream(j, i):
    return (j << 32) | i


def density_response(family, n, lambda_grid, trials, seed=0, q=2, analytic=None):
    """Final mean height over ``V'`` after stabilising Poisson(lambda) piles.

    Returns one dict per lambda with the estimate and, when ``analytic`` (a
    function of lambda) is given, the predicted value.
    """
    g = build_family(family, n, with_sink=True, q=q)
    idx = g.nonsinks
    rows = []
    for j, lam in enumerate(lambda_grid):
        _check_lambda(lam)
        vals = []
        for i in range(trials):
            gen = RngStream(seed, _stream(j, i)).gen
            c = np.zeros(g.num_vertices, np.int64)
            c[idx] = poisson_config(lam, idx.size, gen)
            final, _ = stabilize(g, c)
            vals.append(final[idx].mean())
        mean = math.fsum(vals) / len(vals)
        stderr = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else float("nan")
        row = {"lambda": lam, "rho": mean, "stderr": stderr, "trials": trials, "values": vals}
        if analytic is not None:
            row["analytic"] = analytic(lam)
        rows.append(row)
    return rows


def activity_response(family, n, lambda_grid, trials, seed=0, q=2, max_steps=None):
    """Activity of parallel chip-firing from Poisson(lambda) piles on the sinkless graph.

    For each lambda returns the per-trial activities (None when the orbit
    budget ran out), the observed periods and their histogram.  On the flower
    the activity predicted from ``(R, Z)`` is recorded as well.
    """
    g = build_family(family, n, with_sink=False, q=q)
    rows = []
    for j, lam in enumerate(lambda_grid):
        _check_lambda(lam)
        acts, periods, predicted = [], [], []
        for i in range(trials):
            gen = RngStream(seed, _stream(j, i)).gen
            c = poisson_config(lam, g.num_vertices, gen)
            try:
                orbit = find_orbit(g, c, max_steps)
                acts.append(orbit.activity)
                periods.append(orbit.period)
            except OrbitNotFound:
                acts.append(None)
                periods.append(None)
            if family == "flower":
                z, _ = petal_invariant(g, c)
                predicted.append(flower_activity_from_RZ(n, int(c.sum()), z))
        rows.append({
            "lambda": lam,
            "activities": acts,
            "periods": periods,
            "histogram": Counter(acts),
            "predicted": predicted or None,
            "budget_exhausted": sum(a is None for a in acts),
        })
    return rows


# --- export --------------------------------------------------------------------

TRIAL_COLUMNS = ["graph_family", "size", "seed", "stream_id", "m", "density", *HIST_LABELS, "topples"]


def write_trials_csv(path, family, size, seed, trials, header_lines=()):
    """One CSV row per threshold trial; ``header_lines`` become leading ``#`` comments."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for t in trials:
            w.writerow([family, size, seed, t.stream_id, t.m, repr(t.m / t.n_sites),
                        *map(int, t.height_histogram), t.total_topples])


def threshold_summary_json(family, size, summary):
    return {
        "family": family,
        "size": size,
        "n_trials": summary.estimate.n_trials,
        "zeta_c_hat": summary.estimate.mean,
        "stderr": summary.estimate.stderr,
        "marginals": [float(x) for x in summary.marginals],
        "mean_topples": summary.mean_topples,
    }


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")
