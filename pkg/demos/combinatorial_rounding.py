"""Rounding fractional points of combinatorial polytopes.

A point in the spanning-tree polytope of K_4 becomes a short list of
spanning trees whose average matches it in l_2, and a unit flow on a small
DAG becomes a few weighted s-t paths.  Only a linear minimization oracle
(greedy, shortest path) is ever used; the vertex sets are never listed.
"""

import math

import numpy as np

from sparsecara.caratheodory import CaraProblem, approx_caratheodory
from sparsecara.oracles import DagFlowNetwork, dag_path_oracle, graphic_matroid, matroid_base_oracle

edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
M = graphic_matroid(edges)
x = np.full(6, 0.5)  # every edge of K_4 lies in half of the spanning trees
comb = approx_caratheodory(CaraProblem(matroid_base_oracle(M), x, 2.0, 0.1, math.sqrt(M.rank)))
print(f"K_4 spanning trees: {comb.support} trees, marginal error {comb.residual_norm:.4f}, "
      f"{M.queries} independence queries")
for tree, w in sorted(comb.entries, key=lambda e: -e[1])[:4]:
    print(f"  weight {w:.3f}: {[edges[e] for e in tree]}")

# diamond with a shortcut: s=0 -> {1, 2} -> t=3, plus 0 -> 3
arcs = [(0, 1), (0, 2), (1, 3), (2, 3), (0, 3), (1, 2)]
flow = np.array([0.5, 0.3, 0.3, 0.5, 0.2, 0.2])
G = DagFlowNetwork(4, arcs, flow, 0, 3, order=[0, 1, 2, 3])
G.validate()
comb = approx_caratheodory(CaraProblem(dag_path_oracle(G), flow, 2.0, 0.05, math.sqrt(4)))
print(f"\nflow decomposition: {comb.support} paths, flow error {comb.residual_norm:.4f}")
for path, w in sorted(comb.entries, key=lambda e: -e[1]):
    nodes = [arcs[path[0]][0]] + [arcs[k][1] for k in path]
    print(f"  weight {w:.3f}: {' -> '.join(map(str, nodes))}")
