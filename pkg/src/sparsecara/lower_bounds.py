"""Instances on which sparse approximation cannot do much better.

Two families: scaled Sylvester-Hadamard matrices, where any ``k``-sparse
combination has squared l_2 error at least ``1/k - 1/n`` from the centre
``e_1 n^{-1/p}``, and random sign matrices, where a dual vector spread over
"good rows" certifies a lower bound on ``||Vx||_p`` for every ``x`` supported
on a fixed column set.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .caratheodory import SparseCombination, lp_residual
from .errors import ParameterError
from .mirror import conjugate_exponent, lp_norm

MAX_HADAMARD = 1 << 16


def sylvester(n: int) -> np.ndarray:
    """``n x n`` Sylvester-Hadamard sign matrix (int8), ``n`` a power of two."""
    if not (isinstance(n, (int, np.integer)) and n >= 1 and n & (n - 1) == 0):
        raise ParameterError(f"n must be a power of two, got {n!r}")
    if n > MAX_HADAMARD:
        raise ParameterError(f"n must be at most {MAX_HADAMARD}")
    H = np.ones((1, 1), dtype=np.int8)
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H


@dataclass
class HadamardInstance:
    """Columns ``H / n^{1/p}`` and target ``e_1 / n^{1/p}``, their uniform average."""

    n: int
    p: float = 2.0
    H: np.ndarray = field(init=False, repr=False)
    V: np.ndarray = field(init=False, repr=False)
    u: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.p >= 2:
            raise ParameterError("p must be >= 2")
        self.H = sylvester(self.n)
        scale = self.n ** (1.0 / self.p)
        self.V = self.H / scale
        self.u = np.zeros(self.n)
        self.u[0] = 1.0 / scale


def hadamard_sparsity_certificate(inst: HadamardInstance, comb: SparseCombination):
    """``(k, bound_ok)`` with ``bound_ok`` the inequality ``eps^2 >= 1/k - 1/n``.

    ``eps`` is the l_2 residual of the combination in the unnormalized scale
    (columns of ``H / sqrt(n)``, unit l_2 norm), where the inequality is
    exact for any ``k``-sparse convex combination.
    """
    k = comb.support
    n = inst.n
    eps2 = _unit_l2_residual(inst, comb) ** 2
    ok = bool(k == 0 or eps2 >= 1.0 / k - 1.0 / n - 1e-9)
    return k, ok


def _unit_l2_residual(inst: HadamardInstance, comb: SparseCombination) -> float:
    cols = inst.H.astype(float) / math.sqrt(inst.n)
    target = np.zeros(inst.n)
    target[0] = 1.0 / math.sqrt(inst.n)
    return lp_residual(comb, vertices=lambda j: cols[:, j], u=target, p=2.0)


def hadamard_record(inst: HadamardInstance, comb: SparseCombination, eps: float) -> dict:
    """JSON certificate ``{n, p, eps, k, residual, bound_ok}``."""
    k, ok = hadamard_sparsity_certificate(inst, comb)
    return {
        "n": inst.n,
        "p": float(inst.p),
        "eps": float(eps),
        "k": k,
        "residual": float(lp_residual(comb, vertices=lambda j: inst.V[:, j], u=inst.u, p=inst.p)),
        "unit_l2_residual": float(_unit_l2_residual(inst, comb)),
        "bound_ok": ok,
    }


def hadamard_best_sparse(n: int, k: int, step: float = 0.01) -> float:
    """Smallest squared unit-scale l_2 error over ``k``-column supports.

    Weights range over the ``step`` simplex grid; every support of size
    ``k`` is enumerated and the error is evaluated directly, without the
    orthogonality identity the certificate relies on.
    """
    from itertools import combinations

    H = sylvester(n).astype(float) / math.sqrt(n)
    target = np.zeros(n)
    target[0] = 1.0 / math.sqrt(n)
    W = _simplex_grid(k, step)
    best = math.inf
    for S in combinations(range(n), k):
        R = W @ H[:, list(S)].T - target
        best = min(best, float(np.min(np.einsum("ij,ij->i", R, R))))
    return best


def _simplex_grid(k: int, step: float) -> np.ndarray:
    units = int(round(1.0 / step))
    rows = []

    def rec(prefix, left, slots):
        if slots == 1:
            rows.append(prefix + [left])
            return
        for a in range(left + 1):
            rec(prefix + [a], left - a, slots - 1)

    rec([], units, k)
    return np.array(rows, dtype=float) * step


# ---------------------------------------------------------------------------
# random sign matrices


def sign_matrix(n: int, seed: int, m: Optional[int] = None) -> np.ndarray:
    """``n x m`` +-1 matrix from the low bit of a Philox stream."""
    m = n if m is None else m
    bits = np.random.Generator(np.random.Philox(seed)).bit_generator.random_raw(n * m)
    return np.where(bits & 1, 1, -1).astype(np.int8).reshape(n, m)


@dataclass
class RandomSignInstance:
    """``V = n^{-1/p} A`` for a seeded random sign matrix ``A``."""

    n: int
    seed: int
    p: float = 2.0
    epsilon: float = 0.25
    A: np.ndarray = field(init=False, repr=False)
    V: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be positive")
        if not self.p >= 2:
            raise ParameterError("p must be >= 2")
        self.A = sign_matrix(self.n, self.seed)
        self.V = self.A / self.n ** (1.0 / self.p)


def good_rows(A, S: Iterable[int], eps: float) -> np.ndarray:
    """Rows with strictly more than ``(1/2 + eps) k`` entries ``+1`` on columns ``S``."""
    S = np.asarray(list(S), dtype=int)
    if len(S) == 0:
        raise ParameterError("column set must be nonempty")
    plus = np.sum(np.asarray(A)[:, S] > 0, axis=1)
    return np.flatnonzero(plus > (0.5 + eps) * len(S))


def adversarial_vector(inst: RandomSignInstance, S) -> np.ndarray:
    """``r^{-1/q}`` on the good rows, zero elsewhere; unit l_q norm when ``r > 0``."""
    R = good_rows(inst.A, S, inst.epsilon)
    y = np.zeros(inst.n)
    if len(R):
        q = conjugate_exponent(inst.p)
        y[R] = len(R) ** (-1.0 / q)
    return y


def adversarial_value(inst: RandomSignInstance, S) -> float:
    """``min_{j in S} (y^T V)_j`` for the good-row dual vector ``y``.

    Since ``||y||_q <= 1``, Hoelder gives ``||Vx||_p >= y^T V x`` and
    ``y^T V x >= min_j (y^T V)_j`` for ``x`` in the simplex on ``S``.
    """
    S = list(S)
    y = adversarial_vector(inst, S)
    if not np.any(y):
        return 0.0
    return float(np.min(y @ inst.V[:, S]))


def predicted_value(inst: RandomSignInstance, r: int) -> float:
    """``eps (r/n)^{1/p}``, the scale the value is compared against."""
    return inst.epsilon * (r / inst.n) ** (1.0 / inst.p)


def monte_carlo_report(
    n: int, p: float, eps: float, k: int, seeds: Iterable[int], samples: int = 100
) -> tuple[list[dict], int]:
    """Rows ``{seed, r, good_fraction, value, predicted, min_norm}`` and the violation count.

    For each seed ``S`` is the first ``k`` columns, and ``samples`` random
    simplex points on ``S`` (Philox stream ``seed + 1``) are checked
    against the certified value.
    """
    rows = []
    violations = 0
    for seed in seeds:
        inst = RandomSignInstance(n, int(seed), p, eps)
        S = list(range(k))
        R = good_rows(inst.A, S, eps)
        val = adversarial_value(inst, S)
        rng = np.random.Generator(np.random.Philox(int(seed) + 1))
        X = rng.dirichlet(np.ones(k), size=samples)
        VS = inst.V[:, S]
        norms = [lp_norm(VS @ x, p) for x in X]
        violations += sum(1 for v in norms if v < val - 1e-9)
        rows.append({
            "seed": int(seed),
            "r": int(len(R)),
            "good_fraction": len(R) / n,
            "value": val,
            "predicted": predicted_value(inst, len(R)),
            "min_norm": float(min(norms)),
        })
    return rows, violations


def report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
