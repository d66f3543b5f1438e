"""Sparse convex combinations of LMO-accessed vertices.

The solver minimizes ``f(y) = max_x y.(u - Vx)`` over the unit l_q ball with
Mirror Descent.  Each step makes one oracle call and the subgradient is
``u - v`` for the returned vertex ``v``, so after ``T`` steps the uniform
average of the chosen vertices is a convex combination with at most ``T``
distinct vertices; the regret bound controls its l_p distance to ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import (
    AssumptionViolated,
    ContractViolation,
    ConvergenceFailure,
    ParameterError,
)
from .mirror import DescentTrace, lp_norm, lq_mirror_map, mirror_descent
from .oracles import LinearMinimizationOracle, translated_oracle

VERTEX_NORM_SLACK = 1e-9


@dataclass
class CaraProblem:
    """Target ``u`` and an oracle over vertices inside the l_p ball of ``radius``."""

    oracle: LinearMinimizationOracle
    u: np.ndarray
    p: float
    epsilon: float
    radius: float = 1.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if not (self.p >= 2 and math.isfinite(self.p)):
            raise ParameterError(f"p must be finite and >= 2, got {self.p!r}")
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ParameterError("radius must be positive and finite")
        if not np.all(np.isfinite(self.u)):
            raise ParameterError("target has non-finite entries")
        if self.u.shape != (self.oracle.dim,):
            raise ParameterError(
                f"target has shape {self.u.shape}, oracle dimension is {self.oracle.dim}"
            )


@dataclass
class SparseCombination:
    """Weighted vertices ``sum_j weights[j] * points[j]``.

    ``ids`` are the oracle's vertex ids, distinct and in order of first
    selection; ``points`` holds the matching vertex vectors.
    """

    ids: list
    weights: np.ndarray
    points: np.ndarray
    residual_norm: float
    p: float
    iterations: int = 0
    oracle_calls: int = 0
    rounds: int = 1
    trace: Optional[DescentTrace] = field(default=None, repr=False)

    @property
    def entries(self) -> list:
        return list(zip(self.ids, self.weights.tolist()))

    @property
    def support(self) -> int:
        return len(self.ids)

    @property
    def mass(self) -> float:
        return float(sum(self.weights.tolist()))

    def combine(self) -> np.ndarray:
        """The represented point, summed in entry order."""
        acc = np.zeros(self.points.shape[1])
        for w, v in zip(self.weights, self.points):
            acc += w * v
        return acc

    def vertex_map(self) -> dict:
        return {vid: v for vid, v in zip(self.ids, self.points)}

    def to_dict(self) -> dict:
        return {
            "entries": [{"id": _jsonable(i), "weight": float(w)} for i, w in self.entries],
            "support": self.support,
            "mass": self.mass,
            "residual": float(self.residual_norm),
            "p": float(self.p),
            "iterations": int(self.iterations),
            "oracle_calls": int(self.oracle_calls),
            "rounds": int(self.rounds),
        }


def _jsonable(x):
    if isinstance(x, (tuple, list)):
        return [_jsonable(e) for e in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def lp_residual(comb: SparseCombination, vertices=None, u=None, p=None) -> float:
    """``||sum_j w_j v_j - u||_p`` with vertices looked up by id.

    ``vertices`` may be a mapping or a callable ``id -> vector``; by default
    the combination's own points are used.  Missing ids raise ``LookupError``.
    """
    p = comb.p if p is None else p
    if vertices is None:
        pts = comb.points
    else:
        get = vertices.__getitem__ if isinstance(vertices, Mapping) else vertices
        pts = [np.asarray(get(i), dtype=float) for i in comb.ids]
    dim = len(pts[0]) if len(pts) else (0 if u is None else len(u))
    acc = np.zeros(dim)
    for w, v in zip(comb.weights, pts):
        acc += w * v
    if u is not None:
        acc -= np.asarray(u, dtype=float)
    return lp_norm(acc, p)


def iteration_budget(p: float, epsilon: float, radius: float = 1.0) -> int:
    """``ceil(4 (p-1) radius^2 / epsilon^2)``: steps, and the support cap."""
    return int(math.ceil(4.0 * (p - 1.0) * radius * radius / (epsilon * epsilon) - 1e-9))


def approx_caratheodory(
    prob: CaraProblem,
    *,
    early_exit: bool = True,
    assert_member: bool = False,
    T: Optional[int] = None,
    callback: Optional[Callable] = None,
    record: bool = False,
) -> SparseCombination:
    """Sparse combination within ``epsilon`` of ``u`` (plus the hull distance).

    Parameters
    ----------
    prob : CaraProblem
    early_exit : bool
        Every ``ceil(T/16)`` steps, stop if the running average is already
        within ``epsilon``.  Unless ``T`` or ``callback`` is given, one
        extra oracle call on ``-u`` first checks whether a single vertex
        already suffices.
    assert_member : bool
        Caller guarantees ``u`` is in the hull; a residual above ``epsilon``
        then raises :class:`ConvergenceFailure`.
    T : int, optional
        Override of the step budget ``ceil(4 (p-1) R^2 / eps^2)``.
    callback : callable, optional
        ``callback(t, running_sum, vertex, vertex_id, y)`` after every step;
        ``running_sum`` is the sum of the first ``t+1`` chosen vertices.
        Returning True stops the run.
    record : bool
        Keep per-step subgradients in the attached trace.
    """
    p, R, eps = prob.p, prob.radius, prob.epsilon
    oracle = prob.oracle
    d = oracle.dim
    budget = iteration_budget(p, eps, R) if T is None else int(T)
    u = prob.u
    u_scaled = u / R
    limit = R * (1.0 + VERTEX_NORM_SLACK)

    counts: dict = {}
    store: dict = {}
    running = np.zeros(d)
    calls0 = oracle.calls

    if early_exit and T is None and callback is None:
        # one probe: the vertex best aligned with u may already be close enough
        vid, v = oracle(-u)
        v = np.asarray(v, dtype=float)
        if lp_norm(v, p) <= limit and lp_norm(v - u, p) <= eps:
            comb = SparseCombination(
                ids=[vid],
                weights=np.ones(1),
                points=v.reshape(1, d).copy(),
                residual_norm=0.0,
                p=p,
                iterations=0,
                oracle_calls=oracle.calls - calls0,
            )
            comb.residual_norm = lp_residual(comb, u=u)
            return comb

    check_every = max(1, math.ceil(budget / 16))

    def subgrad(y):
        vid, v = oracle(y)
        v = np.asarray(v, dtype=float)
        if vid not in store:
            nv = lp_norm(v, p)
            if nv > limit:
                raise ContractViolation(
                    f"oracle vertex {vid!r} has l_{p:g} norm {nv:.12g} > radius {R:.12g}"
                )
            store[vid] = v
        return u_scaled - v / R, vid

    def on_step(t, y, g, vid):
        counts[vid] = counts.get(vid, 0) + 1
        v = store[vid]
        np.add(running, v, out=running)
        stop = False
        if callback is not None and callback(t, running, v, vid, y):
            stop = True
        if early_exit and (t + 1) % check_every == 0 and t + 1 < budget:
            if lp_norm(running / (t + 1) - u, p) <= eps:
                stop = True
        return stop

    # |u/R - v/R|_p <= 2 when u lies in the radius ball; larger targets widen rho
    rho = max(2.0, 1.0 + lp_norm(u_scaled, p))
    trace = mirror_descent(lq_mirror_map(p, d), subgrad, rho, budget, callback=on_step, record=record)

    used = trace.iterations
    ids = list(counts)
    weights = np.array([counts[i] / used for i in ids])
    points = np.array([store[i] for i in ids]).reshape(len(ids), d)
    comb = SparseCombination(
        ids=ids,
        weights=weights,
        points=points,
        residual_norm=0.0,
        p=p,
        iterations=used,
        oracle_calls=oracle.calls - calls0,
        trace=trace,
    )
    comb.residual_norm = lp_residual(comb, u=u)
    if assert_member and comb.residual_norm > eps * (1 + 1e-9):
        raise ConvergenceFailure(
            f"residual {comb.residual_norm:.6g} exceeds epsilon {eps:.6g} after {used} steps",
            result=comb,
        )
    return comb


def _round_count(r: float, eps: float) -> int:
    return max(1, int(math.ceil(math.log2(r / eps) - 1e-12)))


def boosted_caratheodory(prob: CaraProblem, r: float, *, early_exit: bool = True) -> SparseCombination:
    """Halving refinement when the l_p ball of radius ``r`` lies inside the hull.

    Runs ``beta = ceil(log2(r / eps))`` rounds at precision ``r/2``, each on
    the doubled leftover error; round ``i`` is weighted by ``2**-(i-1)``.
    The weights sum to ``2 (1 - 2**-beta)`` rather than 1.
    """
    eps, p = prob.epsilon, prob.p
    if not r > 0:
        raise ParameterError("inner radius r must be positive")
    if not eps < r:
        raise ParameterError(f"epsilon ({eps}) must be smaller than r ({r})")
    if prob.radius > 1.0 + 1e-12:
        raise ParameterError("boosted solver expects vertices inside the unit l_p ball")
    beta = _round_count(r, eps)
    oracle = prob.oracle
    calls0 = oracle.calls

    merged: dict = {}
    store: dict = {}
    err = prob.u.copy()
    iterations = 0
    for i in range(beta):
        sub = approx_caratheodory(CaraProblem(oracle, err, p, r / 2.0, 1.0), early_exit=early_exit)
        iterations += sub.iterations
        scale = 2.0 ** (-i)
        for vid, w, v in zip(sub.ids, sub.weights, sub.points):
            merged[vid] = merged.get(vid, 0.0) + scale * w
            store.setdefault(vid, v)
        err = 2.0 * (err - sub.combine())
        nrm = lp_norm(err, p)
        if nrm > r * (1 + 1e-6):
            raise AssumptionViolated(
                f"round {i + 1}: doubled error has norm {nrm:.6g} > r = {r:.6g}; "
                "the ball B_p(r) is not inside the hull"
            )

    ids = list(merged)
    comb = SparseCombination(
        ids=ids,
        weights=np.array([merged[i] for i in ids]),
        points=np.array([store[i] for i in ids]).reshape(len(ids), oracle.dim),
        residual_norm=0.0,
        p=p,
        iterations=iterations,
        oracle_calls=oracle.calls - calls0,
        rounds=beta,
    )
    comb.residual_norm = lp_residual(comb, u=prob.u)
    return comb


def recentered_caratheodory(prob: CaraProblem, r: float, *, early_exit: bool = True) -> SparseCombination:
    """Boosted solver around ``u`` for ``B_p(u, r) <= P <= B_p(u, 1)``.

    Vertices are translated by ``-u``, the boosted solver targets the
    origin, and the weights are normalized to sum to one.
    """
    eps, p = prob.epsilon, prob.p
    if r < 2 * eps:
        raise ParameterError(f"need r >= 2 * epsilon, got r={r}, epsilon={eps}")
    oracle = prob.oracle
    u = prob.u
    calls0 = oracle.calls

    # degenerate case: the vertex most aligned with u already is u
    vid, v = oracle(-u)
    v = np.asarray(v, dtype=float)
    if lp_norm(v - u, p) <= eps:
        comb = SparseCombination(
            ids=[vid],
            weights=np.ones(1),
            points=v.reshape(1, -1).copy(),
            residual_norm=0.0,
            p=p,
            iterations=0,
            oracle_calls=oracle.calls - calls0,
            rounds=0,
        )
        comb.residual_norm = lp_residual(comb, u=u)
        return comb

    shifted = translated_oracle(oracle, u)
    inner = boosted_caratheodory(
        CaraProblem(shifted, np.zeros_like(u), p, eps, 1.0), r, early_exit=early_exit
    )
    total = inner.mass
    comb = SparseCombination(
        ids=inner.ids,
        weights=inner.weights / total,
        points=inner.points + u,
        residual_norm=0.0,
        p=p,
        iterations=inner.iterations,
        oracle_calls=oracle.calls - calls0,
        rounds=inner.rounds,
    )
    comb.residual_norm = lp_residual(comb, u=u)
    return comb
