"""
Counting recurrent configurations three ways
============================================

On a small sinked graph the recurrent configurations can be listed with
the burning test, reached as the closed class of the addition chain, or
counted as spanning trees (matrix-tree theorem).  The mean recurrent height
also follows from spanning tree and unicyclic subgraph counts.
"""

from sandlab import analytic
from sandlab.core import enumerate_recurrent, mean_height, spanning_tree_count, unicyclic_count
from sandlab.graph import build_bracelet, build_complete, build_cycle, build_ladder
from sandlab.verify import reachable_recurrent

graphs = {
    "cycle Z5": build_cycle(5, True),
    "bracelet B4": build_bracelet(4, True),
    "complete K4": build_complete(4, True),
    "ladder, 4 rungs": build_ladder(4),
}

for name, g in graphs.items():
    burning = enumerate_recurrent(g)
    reach = reachable_recurrent(g)
    kappa = spanning_tree_count(g.graph, g.sinks)
    print(f"{name:16s} burning {len(burning):4d}  reachable {len(reach):4d}  trees {kappa:4d}  "
          f"mean height over V' {mean_height(burning, g.nonsinks)}")

# single sink: (m - d + u / kappa) / n, with u the number of unicyclic subgraphs
k4 = build_complete(4)
print("K4: kappa =", spanning_tree_count(k4), " u =", unicyclic_count(k4),
      " zeta_s per vertex / per non-sink =", *analytic.tutte_zeta_s(k4))
