import math
from fractions import Fraction as F

import numpy as np
import pytest

from sandlab import analytic as an
from sandlab.core import enumerate_recurrent, mean_height
from sandlab.graph import MultiGraph, build_complete, build_cycle

SQRT3 = math.sqrt(3)


def test_p_odd_and_pairs():
    assert an.p_odd(0) == 0
    assert an.p_odd(1) == pytest.approx(0.4323324, abs=1e-7)
    assert an.pair_density(an.bracelet_zeta_c()) == pytest.approx(1.0, abs=1e-12)
    grid = np.linspace(0, 6, 50)
    pairs = [an.pair_density(x) for x in grid]
    assert min(pairs) >= 0 and all(np.diff(pairs) > 0)
    with pytest.raises(ValueError):
        an.p_odd(-0.1)


@pytest.mark.parametrize("name,value", [("bracelet_zeta_c", 2.496608), ("flower_zeta_c", 1.6688976),
                                        ("flower_zeta_c_prime", 3.3333182)])
def test_roots(name, value):
    root = getattr(an, name)()
    assert root == pytest.approx(value, abs=1e-6)
    f, _ = an.ROOT_EQUATIONS[name]
    assert abs(f(root)) < 1e-12
    # unique sign change on [0, 10]
    xs = np.linspace(0, 10, 20001)
    signs = np.sign([f(x) for x in xs])
    assert np.count_nonzero(np.diff(signs)) == 1


def test_density_laws():
    zc = an.bracelet_zeta_c()
    for lam in (0.3, 1.0, 2.0, zc - 1e-9):
        assert an.bracelet_rho(lam) == lam
    assert an.bracelet_rho(60.0) == pytest.approx(2.5)
    assert an.bracelet_rho(3.0) == pytest.approx((5 - math.exp(-6)) / 2)
    assert an.flower_rho(2.0) == pytest.approx(5 / 3 + math.exp(-6) / 3)
    assert an.flower_rho(1.0) == 1.0
    assert an.cycle_rho(0.5) == 0.5 and an.cycle_rho(1.5) == 1.0


def test_prob_x0_routes():
    assert an.flower_prob_X0(0) == 1 and an.markov_prob_X0(0) == pytest.approx(1, abs=1e-15)
    assert an.flower_prob_X0(40.0) == pytest.approx(1 / 3)
    assert an.markov_prob_X0(1) == pytest.approx((1 + 2 * math.exp(-3)) / 3, abs=1e-12)
    assert an.markov_prob_X0(1) == pytest.approx(0.36652, abs=1e-5)
    for lam in np.linspace(0, 8, 33):
        assert abs(an.markov_prob_X0(lam) - an.flower_prob_X0(lam)) < 1e-10


def test_cayley_table():
    assert an.cayley_height_dist(2) == [F(1, 12), F(4, 12), F(7, 12)]
    assert an.cayley_height_dist(3) == [F(2, 27), F(2, 9), F(1, 3), F(10, 27)]
    assert an.cayley_height_dist(4) == [F(81, 1280), F(27, 160), F(153, 640), F(21, 80), F(341, 1280)]
    for q in range(2, 9):
        assert sum(an.cayley_height_dist(q)) == 1
        assert an.cayley_zeta_s(q) == F(q + 1, 2)
    with pytest.raises(ValueError):
        an.cayley_height_dist(1)


def test_ladder_law():
    law = an.ladder_stationary()
    a = law.transfer_matrix.astype(float)
    assert law.perron_value == pytest.approx(2 + SQRT3, abs=1e-10)
    assert np.allclose(a @ law.right_vec, law.perron_value * law.right_vec, atol=1e-10)
    assert np.allclose(law.left_vec @ a, law.perron_value * law.left_vec, atol=1e-10)
    assert np.allclose(law.right_vec, an.LADDER_CLOSED_FORM["right_vec"], atol=1e-10)
    assert np.allclose(law.left_vec, an.LADDER_CLOSED_FORM["left_vec"], atol=1e-10)
    assert law.state_probs.sum() == pytest.approx(1)
    assert law.height_probs.sum() == pytest.approx(1)
    assert np.allclose(law.height_probs, [0.0773503, 0.2396370, 0.6830127], atol=1e-7)
    assert law.zeta_s == pytest.approx(1.60566243, abs=1e-8)
    assert law.zeta_s == pytest.approx(7 / 4 - SQRT3 / 12, abs=1e-12)
    p = law.parry_transition()
    assert np.allclose(p.sum(axis=1), 1)
    assert np.allclose(law.state_probs @ p, law.state_probs, atol=1e-10)


def test_tutte_examples():
    assert an.tutte_zeta_s(build_complete(3)) == (F(4, 9), F(2, 3))
    assert an.tutte_zeta_s(build_complete(4))[0] == F(63, 64)
    for n in (4, 5):
        per_vertex, per_nonsink = an.tutte_zeta_s(build_cycle(n))
        assert per_vertex == (n - 2 + F(1, n)) / n
        g = build_cycle(n, with_sink=True)
        assert per_nonsink == mean_height(enumerate_recurrent(g), g.nonsinks)
    loops = MultiGraph.from_edges(2, [(0, 0, 1), (0, 1, 1)])
    with pytest.raises(ValueError):
        an.tutte_zeta_s(loops)


def test_reference_constants():
    table = {r["name"]: r for r in an.reference_constants()}
    assert table["Z^2 Pr[h=0]"]["value"] == pytest.approx(0.0736363, abs=1e-7)
    assert table["zeta_c(Z^2)"]["value"] == 2.125288
    assert table["zeta_s(Z^2)"]["value"] == 17 / 8
    assert table["zeta_s(Z^2)"]["kind"] == "conjectural"
    probs = [table[f"Z^2 Pr[h={i}]"]["value"] for i in range(4)]
    assert sum(probs) == pytest.approx(1)
    assert sum(i * p for i, p in enumerate(probs)) == pytest.approx(17 / 8)
    assert probs[1] == pytest.approx(0.173899, abs=1e-6)


def test_density_law_lookup():
    assert an.density_law("bracelet").zeta_s == 2.5
    fl = an.density_law("flower")
    assert fl.zeta_c_prime == pytest.approx(3.3333182, abs=1e-6)
    assert an.density_law("wired-tree", q=3).zeta_s == 2.0
    with pytest.raises(KeyError):
        an.density_law("moebius")
    rows = an.summary_table()
    assert rows[2][0] == "bracelet" and rows[2][2] is True
