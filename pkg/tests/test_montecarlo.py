import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from sandlab.analytic import bracelet_rho, cycle_rho
from sandlab.core import is_recurrent, stabilize_or_detect
from sandlab.graph import (SinkedGraph, build_bracelet, build_complete, build_cycle, build_flower,
                           build_random_regular, build_torus)
from sandlab.montecarlo import (HIST_BUCKETS, BurnInPolicy, Estimate, activity_response,
                                density_response, dump_json, poisson_config, poisson_sample,
                                stationary_density_estimate, stationary_sample, threshold_estimate,
                                threshold_summary_json, threshold_trial, write_trials_csv)
from sandlab.rng import RngStream, as_generator


def test_rng_streams_reproducible():
    a = RngStream(5, 3).gen.integers(0, 1 << 62, size=8)
    b = RngStream(5, 3).gen.integers(0, 1 << 62, size=8)
    c = RngStream(5, 4).gen.integers(0, 1 << 62, size=8)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(TypeError):
        as_generator("seed")


def test_poisson_sample():
    gen = RngStream(1).gen
    assert all(poisson_sample(0.0, gen) == 0 for _ in range(100))
    x = poisson_config(2.5, 10**6, RngStream(2))
    assert abs(x.mean() - 2.5) < 0.005
    odd = poisson_config(1.0, 10**6, RngStream(3)) % 2
    assert abs(odd.mean() - 0.43233) < 0.002
    with pytest.raises(ValueError):
        poisson_sample(-1.0, gen)


def test_estimate():
    e = Estimate.from_samples([1.0, 2.0, 3.0, 4.0])
    assert e.mean == 2.5 and e.n_trials == 4
    assert e.stderr == pytest.approx(math.sqrt(5 / 3 / 4))
    with pytest.raises(ValueError):
        Estimate.from_samples([1.0])


def test_z4_oracle_exhaustive():
    """Every configuration of at most 3 particles on Z_4 stabilises; 4 particles only as all-ones."""
    g = build_cycle(4)
    for total in range(5):
        for c in itertools.product(range(total + 1), repeat=4):
            if sum(c) != total:
                continue
            out = stabilize_or_detect(g, c)
            if total <= 3:
                assert out.stabilized
            elif out.stabilized:
                assert list(out.config) == [1, 1, 1, 1]


def test_threshold_trial_z4():
    g = build_cycle(4)
    for seed in range(100):
        t = threshold_trial(g, RngStream(seed))
        assert t.m in (3, 4)
        assert t.height_histogram.sum() == 4
        assert t.density == Fraction(t.m, 4)


def replay_threshold(g, gen):
    """Independent reference: add at the same sites with a plain Python stabilise loop."""
    n = g.num_vertices
    sites = gen.integers(0, n, size=max(4096, 2 * n), dtype=np.int64)
    h = np.zeros(n, np.int64)
    for m, v in enumerate(sites):
        h[v] += 1
        out = stabilize_or_detect(g, h)
        if not out.stabilized:
            return m
        h = out.config
    raise AssertionError("chunk exhausted")


@pytest.mark.parametrize("builder,n", [(build_torus, 4), (build_bracelet, 9), (build_flower, 5)])
def test_threshold_matches_reference(builder, n):
    g = builder(n)
    for seed in range(20):
        t = threshold_trial(g, RngStream(seed))
        assert t.m == replay_threshold(g, RngStream(seed).gen)
        assert t.height_histogram.sum() == g.num_vertices
        assert t.m / t.n_sites <= g.max_degree


def test_threshold_estimate_workers_identical():
    g = build_torus(8)
    one = threshold_estimate(g, 24, seed=9, workers=1)
    two = threshold_estimate(g, 24, seed=9, workers=2)
    assert one.estimate == two.estimate
    assert np.array_equal(one.marginals, two.marginals)
    assert one.mean_topples == two.mean_topples
    assert one.marginals.shape == (HIST_BUCKETS,) and one.marginals.sum() == pytest.approx(1)


def test_threshold_random_graph_factory():
    factory = lambda gen: build_random_regular(2, 64, gen)
    a = threshold_estimate(factory, 5, seed=1)
    b = threshold_estimate(factory, 5, seed=1)
    assert a.estimate == b.estimate
    assert 1.0 < a.estimate.mean < 3.0


def test_stationary_sample_recurrent():
    g = build_bracelet(12, with_sink=True)
    h = stationary_sample(g, RngStream(4))
    assert is_recurrent(g, h)
    g = build_flower(6, with_sink=True)
    assert is_recurrent(g, stationary_sample(g, RngStream(4), BurnInPolicy(factor=2, start="max")))
    with pytest.raises(ValueError):
        stationary_sample(g, RngStream(4), BurnInPolicy(start="middle"))


def test_stationary_cycle_and_bracelet():
    # exact means over V' (enumeration): (n-1)/n on the cycle, 5/2 - 2/n on the bracelet
    n = 16
    z = stationary_density_estimate(build_cycle(n, True), 200, seed=1, policy=BurnInPolicy(factor=4))
    assert abs(z.per_nonsink.deviation((n - 1) / n)) < 3
    assert z.per_vertex.mean == pytest.approx(z.per_nonsink.mean * (n - 1) / n)
    b = stationary_density_estimate(build_bracelet(n, True), 200, seed=2, policy=BurnInPolicy(factor=4))
    assert abs(b.per_nonsink.deviation(2.5 - 2 / n)) < 3


def test_bracelet_formula_is_v_prime_mean():
    from sandlab.core import enumerate_recurrent, mean_height
    for n in (4, 5, 6):
        g = build_bracelet(n, True)
        assert mean_height(enumerate_recurrent(g), g.nonsinks) == Fraction(5, 2) - Fraction(2, n)


def test_stationary_k3():
    g = build_complete(3, True)
    est = stationary_density_estimate(g, 600, seed=3, policy=BurnInPolicy(factor=2))
    assert abs(est.per_nonsink.deviation(2 / 3)) < 3.5


def test_density_response_small():
    rows = density_response("bracelet", 2000, [1.0, 3.0], trials=4, seed=0, analytic=bracelet_rho)
    assert rows[0]["rho"] == pytest.approx(1.0, abs=0.05)
    assert rows[1]["rho"] == pytest.approx(bracelet_rho(3.0), abs=0.05)
    rows = density_response("cycle", 2000, [0.5, 1.5], trials=3, seed=0, analytic=cycle_rho)
    assert rows[0]["rho"] == pytest.approx(0.5, abs=0.05) and rows[1]["rho"] <= 1.0


def test_activity_response_flower():
    rows = activity_response("flower", 200, [1.0, 4.0], trials=5, seed=0)
    assert rows[0]["histogram"][Fraction(0)] == 5
    assert rows[1]["histogram"][Fraction(1)] == 5
    assert rows[0]["predicted"] == rows[0]["activities"]
    rows = activity_response("torus", 8, [3.5], trials=3, seed=0, max_steps=2)
    assert rows[0]["budget_exhausted"] == 3


def test_exports(tmp_path):
    g = build_cycle(4)
    summary = threshold_estimate(g, 3, seed=0)
    path = tmp_path / "t.csv"
    write_trials_csv(path, "cycle", 4, 0, summary.trials, ["demo"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# demo"
    assert lines[1].split(",")[:6] == ["graph_family", "size", "seed", "stream_id", "m", "density"]
    assert lines[1].endswith("h6,h7plus,topples") and len(lines) == 5
    doc = threshold_summary_json("cycle", 4, summary)
    assert set(doc) == {"family", "size", "n_trials", "zeta_c_hat", "stderr", "marginals", "mean_topples"}
    dump_json({"a": Fraction(1, 3), "b": np.int64(2)}, tmp_path / "x.json")
    assert json.loads((tmp_path / "x.json").read_text()) == {"a": "1/3", "b": 2}
