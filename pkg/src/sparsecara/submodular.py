"""Submodular minimization through the minimum-norm point of the base polytope.

The min-norm point of ``B_f`` is approximated by the sparse-combination
solver with target 0 and Edmonds' greedy as the oracle; a level set of the
resulting vector (Fujishige rounding) is then an approximate minimizer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .caratheodory import CaraProblem, approx_caratheodory
from .errors import NumericFailure, ParameterError
from .oracles import Matroid, submodular_base_oracle

F_SCAN_LIMIT = 16


class SubmodularOracle:
    """Counted access to a set function on ``{0, ..., n-1}``.

    Parameters
    ----------
    n : int
        Ground-set size.
    func : callable
        ``frozenset -> float``.
    F : float, optional
        Largest marginal magnitude ``max |f(S) - f(S - i)|``.  Computed by
        exhaustive scan (not counted as queries) when omitted and ``n <= 16``.
    name : str
        Family label used in reports.

    Every evaluation through :meth:`evaluate` increments ``query_count``;
    the value of the empty set is read once at construction.
    """

    def __init__(self, n: int, func: Callable, F: Optional[float] = None, name: str = "custom"):
        if n < 1:
            raise ParameterError("ground set must be nonempty")
        self.n = int(n)
        self.name = name
        self._func = func
        self.query_count = 0
        self.empty_value = self.evaluate(())
        if F is None:
            if self.n > F_SCAN_LIMIT:
                raise ParameterError(f"F must be supplied for n > {F_SCAN_LIMIT}")
            F = max_marginal(self.n, func)
        self.F = float(F)

    def evaluate(self, S: Iterable[int]) -> float:
        self.query_count += 1
        val = self._func(frozenset(int(i) for i in S))
        val = float(val)
        if not math.isfinite(val):
            raise NumericFailure(f"f returned {val!r}")
        return val

    __call__ = evaluate

    def value(self, S) -> float:
        """Normalized value ``f(S) - f(empty)``."""
        return self.evaluate(S) - self.empty_value

    def raw(self, S) -> float:
        """Uncounted evaluation, for test oracles and reports."""
        return float(self._func(frozenset(int(i) for i in S)))


def max_marginal(n: int, func: Callable) -> float:
    """``max_{i in S} |f(S) - f(S - i)|`` by evaluating all ``2^n`` sets once."""
    vals = np.empty(1 << n)
    for mask in range(1 << n):
        vals[mask] = func(frozenset(i for i in range(n) if mask >> i & 1))
    best = 0.0
    for i in range(n):
        bit = 1 << i
        masks = np.arange(1 << n)
        with_i = masks[(masks & bit) != 0]
        best = max(best, float(np.max(np.abs(vals[with_i] - vals[with_i ^ bit]))))
    return best


def brute_force_minimum(f: SubmodularOracle):
    """Exhaustive minimum over all subsets (uncounted); ties to the smaller set."""
    best_set, best_val = (), f.raw(())
    for k in range(1, f.n + 1):
        for S in itertools.combinations(range(f.n), k):
            v = f.raw(S)
            if v < best_val:
                best_set, best_val = S, v
    return frozenset(best_set), best_val


# ---------------------------------------------------------------------------
# families


def cut_function(n: int, edges, unary=None) -> SubmodularOracle:
    """Weighted cut ``sum_{(a,b) crossing S} w_ab`` plus an optional modular part.

    Edge weights must be nonnegative for submodularity; ``unary`` may have
    any sign.
    """
    edges = [(int(a), int(b), float(w)) for a, b, w in edges]
    for a, b, w in edges:
        if w < 0:
            raise ParameterError("cut weights must be nonnegative")
        if not (0 <= a < n and 0 <= b < n):
            raise ParameterError(f"edge ({a}, {b}) out of range")
    unary = np.zeros(n) if unary is None else np.asarray(unary, dtype=float)
    if unary.shape != (n,):
        raise ParameterError("unary weights must have length n")
    ul = unary.tolist()

    def func(S):
        val = 0.0
        for a, b, w in edges:
            if (a in S) != (b in S):
                val += w
        for i in S:
            val += ul[i]
        return val

    return SubmodularOracle(n, func, name="cut")


def modular_function(weights) -> SubmodularOracle:
    w = [float(x) for x in weights]
    return SubmodularOracle(len(w), lambda S: sum(w[i] for i in sorted(S)), name="modular")


def concave_cardinality(n: int, g: Callable[[int], float], unary=None) -> SubmodularOracle:
    """``g(|S|) + sum_{i in S} unary_i`` with ``g`` concave."""
    ul = [0.0] * n if unary is None else [float(x) for x in unary]
    return SubmodularOracle(n, lambda S: g(len(S)) + sum(ul[i] for i in sorted(S)), name="concave-card")


def matroid_rank_function(M: Matroid, unary=None) -> SubmodularOracle:
    """Matroid rank (plus an optional modular part)."""
    ul = [0.0] * M.n if unary is None else [float(x) for x in unary]

    def func(S):
        base = []
        for e in sorted(S):
            if M.independence(base + [e]):
                base.append(e)
        return len(base) + sum(ul[i] for i in sorted(S))

    return SubmodularOracle(M.n, func, F=None if M.n <= F_SCAN_LIMIT else 1.0 + max(map(abs, ul), default=0.0),
                            name="matroid-rank")


def is_submodular_sample(f: SubmodularOracle, rng, pairs: int = 200, tol: float = 1e-9) -> bool:
    """Spot-check ``f(S) + f(T) >= f(S | T) + f(S & T)`` on random pairs."""
    for _ in range(pairs):
        S = frozenset(np.flatnonzero(rng.random(f.n) < 0.5).tolist())
        T = frozenset(np.flatnonzero(rng.random(f.n) < 0.5).tolist())
        if f.raw(S) + f.raw(T) < f.raw(S | T) + f.raw(S & T) - tol:
            return False
    return True


# ---------------------------------------------------------------------------
# min-norm point and rounding


@dataclass
class MinNormResult:
    """Approximate min-norm point of ``B_f`` and the rounded set."""

    x: np.ndarray
    wolfe_gap: float
    iterations: int
    converged: bool
    gap_target: float
    iter_cap: int
    oracle_calls: int = 0
    certified: bool = False
    minimizer_set: frozenset = frozenset()
    minimizer_value: float = math.nan
    queries: int = 0
    gap_history: list = field(default_factory=list, repr=False)

    @property
    def gap_monotone(self) -> bool:
        """Whether the recorded gaps never increase (by more than 1e-9)."""
        gaps = [g for _, g in self.gap_history]
        return all(b <= a + 1e-9 for a, b in zip(gaps, gaps[1:]))

    def to_dict(self, one_indexed: bool = True) -> dict:
        off = 1 if one_indexed else 0
        return {
            "minimizer_set": sorted(i + off for i in self.minimizer_set),
            "value": self.minimizer_value,
            "iterations": self.iterations,
            "queries": self.queries,
            "wolfe_gap": self.wolfe_gap,
            "converged": self.converged,
            "certified": self.certified,
            "gap_target": self.gap_target,
            "iter_cap": self.iter_cap,
            "oracle_calls": self.oracle_calls,
        }


def wolfe_gap(x, oracle) -> float:
    """``x.x - min_{z in B_f} x.z`` using one oracle call."""
    _, z = oracle(x)
    return float(np.dot(x, x) - np.dot(x, z))


def fujishige_round(x, f: SubmodularOracle):
    """Best prefix of the ascending order of ``x``: ``n + 1`` evaluations.

    Returns ``(set, value)`` with the raw (unnormalized) value; ties go to
    the shorter prefix.
    """
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable").tolist()
    best_k = 0
    best_val = f.evaluate(())
    for k in range(1, f.n + 1):
        val = f.evaluate(order[:k])
        if val < best_val:
            best_k, best_val = k, val
    return frozenset(order[:best_k]), best_val


def min_norm_point(
    f: SubmodularOracle,
    gap_target: float,
    iter_cap: int,
    *,
    integer_certificate: bool = False,
) -> MinNormResult:
    """Approximate the min-norm point of ``B_f`` until the Wolfe gap is small.

    The solver runs with target 0, p = 2 and vertex radius ``sqrt(n) F``.
    With target 0 and p = 2 the dual point of step ``t`` is a positive
    multiple of the running average, so the vertex chosen at step ``t`` is
    the greedy answer for the previous average: the gap of every average is
    available without extra calls.  A gap below ``gap_target`` is confirmed
    with one fresh oracle call before stopping.

    With ``integer_certificate`` (integer-valued ``f``), every ``2(n+1)``
    steps the average is rounded and the run stops once the rounded value is
    within 1 of the lower bound ``f(empty) + sum_i min(x_i, 0)``, which
    proves the rounded set optimal.
    """
    if not gap_target > 0:
        raise ParameterError("gap_target must be positive")
    iter_cap = int(iter_cap)
    if iter_cap < 1:
        raise ParameterError("iter_cap must be >= 1")
    n, F = f.n, f.F
    oracle = submodular_base_oracle(f)

    if F == 0.0:
        # constant f: B_f is the single vertex 0
        _, x = oracle(np.zeros(n))
        return MinNormResult(x, 0.0, 0, True, gap_target, iter_cap, oracle_calls=oracle.calls)

    radius = math.sqrt(n) * F * (1 + 1e-12)
    total = np.zeros(n)
    state = {
        "best_gap": math.inf,
        "best_x": None,
        "converged": False,
        "certified": None,
    }
    history = []
    cert_every = 2 * (n + 1)

    def on_step(t, running, v, vid, y):
        stop = False
        if t >= 1:
            xbar = total / t
            gap = float(np.dot(xbar, xbar) - np.dot(xbar, v))
            if (t & (t - 1)) == 0:
                history.append((t, gap))
            if gap < state["best_gap"] or gap <= gap_target:
                if gap <= gap_target:
                    # confirm against an independent oracle answer
                    gap = wolfe_gap(xbar, oracle)
                if gap < state["best_gap"]:
                    state["best_gap"], state["best_x"] = gap, xbar
                if gap <= gap_target:
                    state["converged"] = True
                    stop = True
            if not stop and integer_certificate and t % cert_every == 0:
                S, val = fujishige_round(xbar, f)
                lower = f.empty_value + float(np.minimum(xbar, 0.0).sum())
                if val - lower < 1.0 - 1e-9:
                    state["certified"] = (S, val, xbar)
                    stop = True
        np.add(total, v, out=total)
        return stop

    comb = approx_caratheodory(
        CaraProblem(oracle, np.zeros(n), 2.0, gap_target, radius),
        early_exit=False,
        T=iter_cap,
        callback=on_step,
    )
    result = MinNormResult(
        x=None,
        wolfe_gap=math.nan,
        iterations=comb.iterations,
        converged=state["converged"],
        gap_target=gap_target,
        iter_cap=iter_cap,
        gap_history=history,
    )
    if state["certified"] is not None:
        S, val, xbar = state["certified"]
        result.x = xbar
        result.wolfe_gap = wolfe_gap(xbar, oracle)
        result.certified = True
        result.minimizer_set, result.minimizer_value = S, val
    elif state["converged"]:
        result.x, result.wolfe_gap = state["best_x"], state["best_gap"]
    else:
        # cap reached: keep the better of the final average and the best seen
        xbar = total / comb.iterations
        gap = wolfe_gap(xbar, oracle)
        if gap <= state["best_gap"]:
            state["best_gap"], state["best_x"] = gap, xbar
        result.x, result.wolfe_gap = state["best_x"], state["best_gap"]
        result.converged = result.wolfe_gap <= gap_target
    result.oracle_calls = oracle.calls
    return result


def iteration_cap(n: int, F: float, k: float) -> int:
    """``ceil(4 n F^2 (n/k)^4)``: step budget for a k-additive minimizer."""
    return int(math.ceil(4.0 * n * F * F * (n / k) ** 4))


def submodular_minimize(f: SubmodularOracle, mode="exact", k: Optional[float] = None,
                        certify: bool = True) -> MinNormResult:
    """Minimize ``f`` exactly (integer-valued ``f``) or up to an additive ``k``.

    ``mode="exact"`` uses ``k = 1/2``; ``mode="additive"`` requires ``k``.
    Stops when the Wolfe gap reaches ``(k/n)^2`` (or, in exact mode with
    ``certify``, as soon as the rounded set is proven optimal), then rounds.
    """
    if mode == "exact":
        k = 0.5
    elif mode == "additive":
        if k is None or not k > 0:
            raise ParameterError("additive mode needs k > 0")
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    n = f.n
    target = (k / n) ** 2
    cap = iteration_cap(n, f.F, k) if f.F > 0 else 1
    res = min_norm_point(f, target, cap, integer_certificate=(mode == "exact" and certify))
    if not res.certified:
        res.minimizer_set, res.minimizer_value = fujishige_round(res.x, f)
    res.queries = f.query_count
    return res
