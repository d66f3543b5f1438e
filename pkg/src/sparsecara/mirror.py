"""Mirror Descent over a compact dual domain, and the truncated l_q mirror map.

The engine is generic: it only needs the dual gradient of the mirror map
(``z -> y``), the map's smoothness constant, a bound on the Bregman
diameter of the domain and a subgradient oracle.  The concrete map used by
the sparse-combination solver is ``omega(y) = 0.5 * ||y||_q**2`` restricted
to the unit l_q ball, whose conjugate has the closed form implemented in
:func:`lq_omega_star` / :func:`lq_dual_gradient`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Optional

import numpy as np

from .errors import ContractViolation, NumericFailure, ParameterError

# relative slack allowed on the declared Lipschitz bound
RHO_SLACK = 1e-9


def conjugate_exponent(p: float) -> float:
    """Return q with 1/p + 1/q = 1."""
    if p == 2:
        return 2.0
    return p / (p - 1.0)


def lp_norm(x, p: float) -> float:
    """l_p norm with the largest magnitude factored out before powering."""
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        return 0.0
    m = a.max()
    if m == 0.0:
        return 0.0
    if not math.isfinite(m):
        raise NumericFailure("non-finite entry in norm argument")
    if math.isinf(p):
        return float(m)
    r = a / m
    if p == 2:
        return float(m * math.sqrt(np.dot(r, r)))
    if p == 1:
        return float(m * r.sum())
    return float(m * np.sum(r**p) ** (1.0 / p))


def l2_norm(x) -> float:
    return lp_norm(x, 2.0)


def _check_p(p: float) -> None:
    if not (p >= 2 and math.isfinite(p)):
        raise ParameterError(f"p must be finite and >= 2, got {p!r}")


def _check_q(q: float) -> None:
    if not (1 < q <= 2):
        raise ParameterError(f"q must lie in (1, 2], got {q!r}")


def _finite(v, what="input"):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericFailure(f"non-finite {what}")
    return v


# ---------------------------------------------------------------------------
# truncated squared l_q norm


def lq_omega(y, q: float) -> float:
    """``0.5 * ||y||_q**2`` on the unit l_q ball."""
    _check_q(q)
    y = _finite(y)
    nrm = lp_norm(y, q)
    if nrm > 1 + 1e-12:
        raise ParameterError(f"point has l_q norm {nrm:.6g} > 1, outside the domain")
    return 0.5 * nrm * nrm


def lq_omega_grad(y, q: float) -> np.ndarray:
    """Gradient ``||y||_q**(2-q) * sign(y) * |y|**(q-1)`` of :func:`lq_omega`."""
    _check_q(q)
    y = _finite(y)
    nrm = lp_norm(y, q)
    if nrm == 0.0:
        return np.zeros_like(y)
    # ||y||^(2-q) |y|^(q-1) = ||y|| (|y|/||y||)^(q-1)
    return nrm * np.sign(y) * (np.abs(y) / nrm) ** (q - 1.0)


def lq_omega_star(z, p: float) -> float:
    """Fenchel conjugate of :func:`lq_omega` with q = p/(p-1).

    Quadratic ``0.5 * ||z||_p**2`` inside the unit l_p ball and linear
    ``||z||_p - 0.5`` outside of it.
    """
    _check_p(p)
    z = _finite(z)
    nrm = lp_norm(z, p)
    if nrm <= 1.0:
        return 0.5 * nrm * nrm
    return nrm - 0.5


def lq_direction(z, p: float) -> np.ndarray:
    """Unit l_q vector ``phi(z)`` with ``z . phi(z) = ||z||_p``; zero maps to zero."""
    _check_p(p)
    z = _finite(z)
    nrm = lp_norm(z, p)
    if nrm == 0.0:
        return np.zeros_like(z)
    # ratio form: |z_i| / ||z||_p <= 1, so powering cannot overflow
    return np.sign(z) * (np.abs(z) / nrm) ** (p - 1.0)


def lq_dual_gradient(z, p: float) -> np.ndarray:
    """Gradient of :func:`lq_omega_star`, a point of the unit l_q ball.

    ``phi(z) * min(1, ||z||_p)`` where ``phi(z)_i = sign(z_i) |z_i|**(p-1) /
    ||z||_p**(p-1)`` is the unit l_q vector aligned with ``z``.  The zero
    vector maps to zero.
    """
    _check_p(p)
    z = _finite(z)
    nrm = lp_norm(z, p)
    if nrm == 0.0:
        return np.zeros_like(z)
    return lq_direction(z, p) * min(1.0, nrm)


def bregman(fval: Callable, grad: Callable, y, x) -> float:
    """Bregman divergence ``f(y) - f(x) - grad(x).(y - x)``."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(fval(y) - fval(x) - np.dot(grad(x), y - x))


# ---------------------------------------------------------------------------
# engine


@dataclass(frozen=True)
class MirrorMapSpec:
    """A mirror map given through its dual gradient.

    Attributes
    ----------
    dual_gradient : callable
        ``z -> y``; maps accumulated (negative) gradients into the domain.
    sigma : float
        ``omega`` is ``1/sigma`` strongly convex, so ``omega*`` is
        ``sigma``-smooth w.r.t. the dual norm.
    diameter : float
        Upper bound ``D`` on the Bregman divergence from the start point.
    dim : int
        Dimension of the domain.
    dual_norm : callable
        Norm in which subgradients are measured (the dual of the norm for
        which ``omega`` is strongly convex).
    """

    dual_gradient: Callable[[np.ndarray], np.ndarray]
    sigma: float
    diameter: float
    dim: int
    dual_norm: Callable[[np.ndarray], float] = l2_norm
    omega: Optional[Callable] = None
    omega_star: Optional[Callable] = None

    def __post_init__(self):
        for name in ("sigma", "diameter"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")


def lq_mirror_map(p: float, dim: int) -> MirrorMapSpec:
    """Truncated ``0.5 ||y||_q**2`` on the unit l_q ball, q = p/(p-1).

    The map is (q-1)-strongly convex in l_q, so sigma = 1/(q-1) = p-1, and
    the Bregman radius from the origin is 1/2.
    """
    _check_p(p)
    q = conjugate_exponent(p)
    return MirrorMapSpec(
        dual_gradient=lambda z: lq_dual_gradient(z, p),
        sigma=p - 1.0,
        diameter=0.5,
        dim=dim,
        dual_norm=lambda g: lp_norm(g, p),
        omega=lambda y: lq_omega(y, q),
        omega_star=lambda z: lq_omega_star(z, p),
    )


def step_size(diameter: float, sigma: float, rho: float, T: int) -> float:
    """Fixed step ``sqrt(2 D / (T sigma rho^2))`` balancing the two regret terms."""
    return math.sqrt(2.0 * diameter / (T * sigma * rho * rho))


def regret_bound(diameter: float, sigma: float, rho: float, T: int) -> float:
    """``sqrt(2 D sigma rho^2 / T)``."""
    return math.sqrt(2.0 * diameter * sigma * rho * rho / T)


@dataclass
class DescentTrace:
    """Record of one Mirror Descent run.

    ``averaged_gradient`` is the sequential mean of the subgradients and
    ``mean_inner`` the mean of ``g_t . y_t``; together they give the
    averaged regret against any comparator ``y`` via :meth:`regret`.
    """

    iterates: list
    averaged_gradient: np.ndarray
    mean_inner: float
    regret_bound: float
    iterations: int
    planned_iterations: int
    step_size: float
    rho: float
    subgradients: Optional[list] = field(default=None, repr=False)
    points: Optional[list] = field(default=None, repr=False)

    @property
    def tags(self) -> list:
        return [tag for _, tag in self.iterates]

    def regret(self, y) -> float:
        """``(1/T) sum_t g_t . (y_t - y)``."""
        return self.mean_inner - float(np.dot(self.averaged_gradient, y))


def mirror_descent(
    mirror_map: MirrorMapSpec,
    subgrad: Callable[[np.ndarray], tuple[Any, Hashable]],
    rho: float,
    T: int,
    callback: Optional[Callable[[int, np.ndarray, np.ndarray, Hashable], bool]] = None,
    record: bool = False,
) -> DescentTrace:
    """Run ``T`` steps of Mirror Descent with the fixed step size.

    Parameters
    ----------
    mirror_map : MirrorMapSpec
    subgrad : callable
        ``y -> (g, tag)``; ``g`` a subgradient at ``y`` and ``tag`` any
        hashable label (the chosen vertex for LMO-driven problems).
    rho : float
        Bound on ``mirror_map.dual_norm(g)``; checked on every step.
    T : int
        Planned number of steps; fixes the step size.
    callback : callable, optional
        ``callback(t, y_t, g_t, tag)`` is invoked after step ``t`` is
        recorded; a truthy return stops the run early.
    record : bool
        Keep every subgradient and every point ``y_t`` in the trace.

    Returns
    -------
    DescentTrace
    """
    T = int(T)
    if T < 1:
        raise ParameterError("T must be >= 1")
    if not (rho > 0 and math.isfinite(rho)):
        raise ParameterError(f"rho must be positive and finite, got {rho!r}")
    D, sigma = mirror_map.diameter, mirror_map.sigma
    eta = step_size(D, sigma, rho, T)
    limit = rho * (1.0 + RHO_SLACK)

    z = np.zeros(mirror_map.dim)
    acc = np.zeros(mirror_map.dim)
    inner = 0.0
    iterates = []
    grads = [] if record else None
    points = [] if record else None
    used = 0
    for t in range(T):
        y = mirror_map.dual_gradient(z)
        g, tag = subgrad(y)
        g = np.asarray(g, dtype=float)
        if not np.all(np.isfinite(g)):
            raise NumericFailure(f"non-finite subgradient at step {t}")
        gn = mirror_map.dual_norm(g)
        if gn > limit:
            raise ContractViolation(
                f"subgradient norm {gn:.12g} exceeds declared bound {rho:.12g} at step {t}"
            )
        acc += g
        inner += float(np.dot(g, y))
        z = z - eta * g
        iterates.append((t, tag))
        if record:
            grads.append(g.copy())
            points.append(np.array(y, dtype=float))
        used = t + 1
        if callback is not None and callback(t, y, g, tag):
            break

    bound = D / (eta * used) + sigma * eta * rho * rho / 2.0
    return DescentTrace(
        iterates=iterates,
        averaged_gradient=acc / used,
        mean_inner=inner / used,
        regret_bound=bound,
        iterations=used,
        planned_iterations=T,
        step_size=eta,
        rho=rho,
        subgradients=grads,
        points=points,
    )
