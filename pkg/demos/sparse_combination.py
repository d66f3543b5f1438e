"""How sparse can an approximate convex combination be?

Draw 200 random columns in the unit l_p ball of R^50 and a dense average
of them.  For each accuracy the solver returns a combination whose support
is bounded by ceil(4 (p-1) / eps^2), independently of the dimension.
"""

import numpy as np

from sparsecara.caratheodory import CaraProblem, approx_caratheodory, iteration_budget
from sparsecara.mirror import lp_norm
from sparsecara.oracles import explicit_oracle

rng = np.random.default_rng(0)
d, m = 50, 200

for p in (2.0, 4.0):
    V = rng.normal(size=(d, m))
    V /= np.array([lp_norm(V[:, j], p) for j in range(m)])
    u = V @ rng.dirichlet(np.ones(m))
    print(f"p = {p:g}: target is a mix of all {m} columns")
    print("   eps   support   cap   residual   steps")
    for eps in (0.4, 0.2, 0.1, 0.05):
        comb = approx_caratheodory(CaraProblem(explicit_oracle(V), u, p, eps))
        print(f"  {eps:5.2f}  {comb.support:7d}  {iteration_budget(p, eps):5d}  "
              f"{comb.residual_norm:8.4f}  {comb.iterations:6d}")
    print()

# weights are multiples of 1/steps: the combination is an empirical average of chosen columns
comb = approx_caratheodory(CaraProblem(explicit_oracle(V), u, 4.0, 0.2))
top = sorted(comb.entries, key=lambda e: -e[1])[:5]
print("heaviest columns at p = 4, eps = 0.2:", [(int(j), round(w, 4)) for j, w in top])
