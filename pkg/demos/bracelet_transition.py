"""
The bracelet phase transition
=============================

Start a Poisson(lambda) pile on the sinked bracelet (a cycle with every edge
doubled) and stabilise it.  Below the threshold nothing leaves through the
sink, so the final density is lambda; above it the density saturates at
(5 - e^{-2 lambda}) / 2.  The two branches meet at zeta_c, the root of
zeta = 5/2 - e^{-2 zeta} / 2.
"""

from sandlab import analytic
from sandlab.montecarlo import density_response

zc = analytic.bracelet_zeta_c()
print(f"zeta_c = {zc:.7f}")

# a thousand sites are plenty to see the kink
grid = [0.5, 1.0, 1.5, 2.0, 2.3, 2.45, 2.55, 2.8, 3.5]
rows = density_response("bracelet", 1000, grid, trials=4, seed=1, analytic=analytic.bracelet_rho)

print(f"{'lambda':>7} {'rho_n':>9} {'formula':>9}")
for r in rows:
    print(f"{r['lambda']:7.2f} {r['rho']:9.5f} {r['analytic']:9.5f}")

# why it works: pairs of particles move together, odd particles never move,
# and the pairs behave like the ordinary sandpile on a line (threshold 1)
print("pair density at zeta_c:", round(analytic.pair_density(zc), 12))
