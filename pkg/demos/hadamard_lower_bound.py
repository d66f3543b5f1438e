"""Sylvester-Hadamard columns: where sparsity cannot be beaten.

The target is the uniform average of the n scaled Hadamard columns.  Any
combination of k columns misses it by at least sqrt(1/k - 1/n) (unit l_2
scale), so accuracy eps forces roughly min(1/eps^2, n) columns.  The solver
output is checked against that floor, and for n = 8 a brute-force search
over supports confirms the floor is attained.
"""

from sparsecara.caratheodory import CaraProblem, approx_caratheodory
from sparsecara.lower_bounds import HadamardInstance, hadamard_best_sparse, hadamard_record
from sparsecara.oracles import explicit_oracle

print("    n    eps    k   1/(eps^2 + 1/n)  certificate")
for n in (16, 64, 256):
    inst = HadamardInstance(n)
    for eps in (0.5, 0.3, 0.2):
        comb = approx_caratheodory(CaraProblem(explicit_oracle(inst.V), inst.u, 2.0, eps))
        rec = hadamard_record(inst, comb, eps)
        floor = 1 / (rec["unit_l2_residual"] ** 2 + 1 / n)
        print(f"  {n:4d}  {eps:4.2f}  {rec['k']:4d}  {floor:14.2f}    {'ok' if rec['bound_ok'] else 'FAILED'}")

print("\nbest k-sparse squared error for n = 8 (grid 0.01) against 1/k - 1/8:")
for k in (1, 2, 3):
    print(f"  k = {k}: {hadamard_best_sparse(8, k):.4f} >= {1 / k - 1 / 8:.4f}")
