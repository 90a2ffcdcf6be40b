"""sandlab: abelian sandpiles, parallel chip-firing and threshold densities.

Modules
-------
graph       multigraph containers and family builders
core        stabilisation, burning test, exact counting oracles
chipfiring  parallel dynamics, orbits, flower invariants
montecarlo  seeded threshold, stationary and response experiments
analytic    closed-form densities and reference constants
cli         command-line driver (``sandlab``)
"""

__version__ = "0.1.0"

from .graph import (MultiGraph, SinkedGraph, build_bracelet, build_circular_ladder,  # noqa: E402
                    build_complete, build_cycle, build_family, build_flower, build_ladder,
                    build_lollipop, build_random_regular, build_torus, build_wired_tree)
from .rng import RngStream  # noqa: E402
