"""
The ladder through its transfer matrix
======================================

Recurrent configurations of the two-leg ladder are words in a 7-letter
shift of finite type.  The uniform measure on long words is the Parry
(maximal entropy) chain, so height probabilities come from the Perron
eigenvalue 2 + sqrt(3) and its left and right eigenvectors.  A direct
simulation of the driven chain on a finite ladder approaches this law from
below; the end rungs are sinks and their influence fades only slowly.
"""

import numpy as np

from sandlab import analytic
from sandlab.graph import build_ladder
from sandlab.montecarlo import stationary_density_estimate

law = analytic.ladder_stationary()
print("Perron value:", law.perron_value, " 2 + sqrt 3 =", 2 + np.sqrt(3))
for state, p in zip(analytic.LADDER_STATES, law.state_probs):
    print(f"  {state:9s} {p:.6f}")
print("height law:", np.round(law.height_probs, 7), " zeta_s =", round(law.zeta_s, 8))

# compare with the driven chain; measure the middle rungs only
for rungs in (8, 20, 60):
    g = build_ladder(rungs)
    middle = np.arange(rungs - 4, rungs + 4)
    est = stationary_density_estimate(g, 400, seed=2, sites=middle)
    print(f"{rungs:3d} rungs, middle heights:", np.round(est.marginals[:3], 4), " mean", est.site_mean)
