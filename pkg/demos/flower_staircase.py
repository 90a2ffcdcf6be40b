"""
A devil's staircase on the flower graph
=======================================

Parallel chip-firing on the flower (triangular petals around one centre)
always settles into an orbit of period at most 3.  Its activity, the
fraction of sites toppling per step, takes only the values 0, 1/3, 1/2, 2/3
and 1, and it is determined by two numbers: the total particle count R and
the number Z of petals whose two heights agree mod 3.
"""

import numpy as np

from sandlab.chipfiring import find_orbit, flower_activity_from_RZ, petal_invariant
from sandlab.graph import build_flower
from sandlab import analytic

n = 2000
g = build_flower(n)
gen = np.random.default_rng(3)

print(f"zeta_c = {analytic.flower_zeta_c():.7f}, zeta_c' = {analytic.flower_zeta_c_prime():.7f}")
print(f"{'lambda':>7} {'R':>7} {'Z':>5} {'period':>6} {'activity':>8} {'R,Z rule':>8}")
for lam in (1.0, 1.7, 1.9, 2.5, 3.1, 3.4, 4.0):
    c = gen.poisson(lam, g.num_vertices)
    z, _ = petal_invariant(g, c)
    orbit = find_orbit(g, c)
    rule = flower_activity_from_RZ(n, int(c.sum()), z)
    print(f"{lam:7.2f} {c.sum():7d} {z:5d} {orbit.period:6d} {str(orbit.activity):>8} {str(rule):>8}")

# Z concentrates around n (1 + 2 e^{-3 lambda}) / 3, which is where the
# outer steps of the staircase come from
lam = 2.0
zs = [petal_invariant(g, gen.poisson(lam, g.num_vertices))[0] / n for _ in range(50)]
print(f"mean Z/n at lambda=2: {np.mean(zs):.4f}, predicted {analytic.flower_prob_X0(lam):.4f}")
