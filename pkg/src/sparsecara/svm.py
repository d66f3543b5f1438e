"""nu-SVM training by Mirror Descent on the shifted kernel norm ball.

The dual quadratic ``min_{lam in S_eta} lam^T K~ lam`` with ``K~ = K +
(eps/2) I`` is written as ``min_lam max_{||y||_{K~^-1} <= 1} y.lam``.
Mirror Descent runs over ``y`` with ``omega(y) = 0.5 ||y||^2_{K~^-1}``,
whose dual gradient ``K~ z min(1, 1/||z||_{K~})`` needs one kernel
product per step, so the kernel matrix is never stored.  Subgradients come
from the greedy oracle over the restricted hull ``S_eta``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import NumericFailure, ParameterError, PSDViolation
from .mirror import MirrorMapSpec, l2_norm, mirror_descent
from .oracles import rch_lmo

KINDS = ("linear", "poly_homogeneous", "poly_inhomogeneous", "rbf", "sigmoid", "precomputed")

# rows of the kernel computed per block in kernel_apply
BLOCK_ENTRIES = 1 << 18
PSD_TOL = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, its parameters, and the diagonal shift.

    ``degree`` for the polynomial kinds, ``sigma`` for rbf, ``alpha`` and
    ``c`` for sigmoid, ``matrix`` for precomputed.  ``shift`` is added to
    the diagonal (``eps/2`` once attached to a problem).
    """

    kind: str = "linear"
    degree: int = 2
    sigma: float = 1.0
    alpha: float = 1.0
    c: float = 0.0
    matrix: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind.startswith("poly") and not (int(self.degree) == self.degree and self.degree >= 1):
            raise ParameterError("polynomial degree must be a positive integer")
        if self.kind == "rbf" and not self.sigma > 0:
            raise ParameterError("rbf sigma must be positive")
        if self.kind == "precomputed":
            if self.matrix is None:
                raise ParameterError("precomputed kernel needs a matrix")
            K = np.asarray(self.matrix, dtype=float)
            if K.ndim != 2 or K.shape[0] != K.shape[1]:
                raise ParameterError(f"precomputed kernel must be square, got shape {K.shape}")
            if not np.all(np.isfinite(K)):
                raise NumericFailure("precomputed kernel has non-finite entries")
            if not np.allclose(K, K.T, rtol=0, atol=1e-12 * max(1.0, np.abs(K).max())):
                raise ParameterError("precomputed kernel is not symmetric")
            object.__setattr__(self, "matrix", K)
        if not (self.shift >= 0 and math.isfinite(self.shift)):
            raise ParameterError("shift must be nonnegative and finite")

    def with_shift(self, shift: float) -> "KernelSpec":
        return replace(self, shift=float(shift), matrix=self.matrix)

    def describe(self) -> dict:
        d = {"kind": self.kind, "shift": self.shift}
        if self.kind.startswith("poly"):
            d["degree"] = int(self.degree)
        elif self.kind == "rbf":
            d["sigma"] = self.sigma
        elif self.kind == "sigmoid":
            d["alpha"] = self.alpha
            d["c"] = self.c
        return d


def kernel_block(spec: KernelSpec, data, rows, cols=None) -> np.ndarray:
    """Unshifted kernel entries ``K[rows][:, cols]``."""
    if spec.kind == "precomputed":
        K = spec.matrix
        return K[np.ix_(rows, np.arange(K.shape[0]) if cols is None else cols)]
    X = np.asarray(data, dtype=float)
    A = X[rows]
    B = X if cols is None else X[cols]
    G = A @ B.T
    if spec.kind == "linear":
        return G
    if spec.kind == "poly_homogeneous":
        return G ** int(spec.degree)
    if spec.kind == "poly_inhomogeneous":
        return (1.0 + G) ** int(spec.degree)
    if spec.kind == "rbf":
        sq = np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * G
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * spec.sigma * spec.sigma))
    return np.tanh(spec.alpha * G + spec.c)


def kernel_value(spec: KernelSpec, x, x2) -> float:
    """``k(x, x2)`` for one pair of feature vectors (not for precomputed)."""
    if spec.kind == "precomputed":
        raise ParameterError("kernel_value needs feature vectors")
    return float(kernel_block(spec, np.vstack([x, x2]), [0], [1])[0, 0])


def _size(spec: KernelSpec, data) -> int:
    if spec.kind == "precomputed":
        return spec.matrix.shape[0]
    return np.asarray(data).shape[0]


def kernel_matrix(spec: KernelSpec, data, shifted: bool = True) -> np.ndarray:
    """Dense ``K~`` (or ``K``); for tests and small instances only."""
    n = _size(spec, data)
    K = np.array(kernel_block(spec, data, np.arange(n)), dtype=float)
    if shifted:
        K[np.diag_indices(n)] += spec.shift
    return K


def kernel_apply(spec: KernelSpec, data, z) -> np.ndarray:
    """``K~ z`` without forming ``K`` (except for precomputed kernels).

    The linear kernel uses ``X (X^T z)``; other kinds build row blocks of
    the kernel on the fly and discard them.
    """
    z = np.asarray(z, dtype=float)
    n = _size(spec, data)
    if z.shape != (n,):
        raise ParameterError(f"vector has shape {z.shape}, kernel has {n} points")
    if not np.all(np.isfinite(z)):
        raise NumericFailure("non-finite entries in kernel_apply argument")
    if spec.kind == "precomputed":
        out = spec.matrix @ z
    elif spec.kind == "linear":
        X = np.asarray(data, dtype=float)
        out = X @ (X.T @ z)
    else:
        out = np.empty(n)
        step = max(1, BLOCK_ENTRIES // max(n, 1))
        for lo in range(0, n, step):
            rows = np.arange(lo, min(n, lo + step))
            out[rows] = kernel_block(spec, data, rows) @ z
    out = out + spec.shift * z
    if not np.all(np.isfinite(out)):
        raise NumericFailure("non-finite kernel product")
    return out


def _sqrt_radicand(val: float) -> float:
    if val < -PSD_TOL:
        raise PSDViolation(f"z^T K~ z = {val:.6g} < 0: kernel is not positive semidefinite")
    return math.sqrt(max(val, 0.0))


def ktilde_norm(spec: KernelSpec, data, z) -> float:
    """``sqrt(z^T K~ z)``."""
    z = np.asarray(z, dtype=float)
    return _sqrt_radicand(float(np.dot(z, kernel_apply(spec, data, z))))


def svm_mirror_gradient(z, spec: KernelSpec, data) -> np.ndarray:
    """``K~ z min(1, 1/||z||_{K~})``, a point of the unit ``K~^-1`` ball."""
    z = np.asarray(z, dtype=float)
    Kz = kernel_apply(spec, data, z)
    nrm = _sqrt_radicand(float(np.dot(z, Kz)))
    if nrm <= 1.0:
        return Kz
    return Kz / nrm


def spectral_bound(spec: KernelSpec, data, refine: bool = False) -> float:
    """Upper bound on ``||K||`` from the trace (unshifted kernel).

    Linear and homogeneous polynomial kernels use ``n max ||x||^(2d)``,
    inhomogeneous ``n (1 + max ||x||^2)^d``, rbf and sigmoid ``n``
    (all entries are at most one in magnitude) and precomputed kernels the
    trace.  ``refine`` replaces the precomputed bound by the top
    eigenvalue, inflated by ``1e-9`` relative.
    """
    n = _size(spec, data)
    if spec.kind == "precomputed":
        K = spec.matrix
        if refine:
            top = float(np.max(np.abs(np.linalg.eigvalsh(K))))
            return top * (1.0 + 1e-9)
        return float(max(np.trace(K), 0.0))
    if spec.kind in ("rbf", "sigmoid"):
        return float(n)
    X = np.asarray(data, dtype=float)
    r2 = float(np.max(np.einsum("ij,ij->i", X, X))) if n else 0.0
    if spec.kind == "linear":
        return n * r2
    d = int(spec.degree)
    if spec.kind == "poly_homogeneous":
        return n * r2**d
    return n * (1.0 + r2) ** d


@dataclass
class SvmProblem:
    """Training set, kernel and the two parameters ``nu`` and ``eps``.

    ``data`` is the ``n x d`` feature matrix, or ``None`` for a precomputed
    kernel.  The kernel is stored with its diagonal shift set to ``eps/2``.
    """

    data: Optional[np.ndarray]
    labels: np.ndarray
    kernel: KernelSpec
    nu: float
    eps: float
    psd_samples: int = 64

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if not (0 < self.nu <= 1):
            raise ParameterError(f"nu must lie in (0, 1], got {self.nu!r}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ParameterError("eps must be positive and finite")
        if self.data is not None:
            self.data = np.asarray(self.data, dtype=float)
            if self.data.ndim != 2:
                raise ParameterError("feature data must be a 2-d array")
            if not np.all(np.isfinite(self.data)):
                raise NumericFailure("feature data has non-finite entries")
        elif self.kernel.kind != "precomputed":
            raise ParameterError("feature data is required unless the kernel is precomputed")
        n = _size(self.kernel, self.data)
        if self.labels.shape != (n,):
            raise ParameterError(f"{self.labels.shape[0]} labels for {n} points")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise ParameterError("labels must be +1 or -1")
        n_pos = int(np.sum(self.labels > 0))
        n_neg = n - n_pos
        if n_pos == 0 or n_neg == 0:
            raise ParameterError("both classes must be nonempty")
        if self.cap * n_pos < 1 - 1e-12 or self.cap * n_neg < 1 - 1e-12:
            raise ParameterError(
                f"S_eta is empty: eta = {self.eta:.6g} with class sizes {n_pos} and {n_neg}"
            )
        self.kernel = self.kernel.with_shift(self.eps / 2.0)
        self._check_minors()

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def eta(self) -> float:
        return 2.0 / (self.nu * self.n)

    @property
    def cap(self) -> float:
        """Per-coordinate cap; ``eta`` above one is the same set as cap one."""
        return min(self.eta, 1.0)

    def _check_minors(self) -> None:
        n = self.n
        if n < 3:
            triples = [tuple(range(n))]
        elif math.comb(n, 3) <= self.psd_samples:
            triples = list(itertools.combinations(range(n), 3))
        else:
            rng = np.random.default_rng(0)
            triples = [tuple(sorted(rng.choice(n, 3, replace=False))) for _ in range(self.psd_samples)]
        for tri in triples:
            idx = np.array(tri)
            B = np.asarray(kernel_block(self.kernel, self.data, idx, idx), dtype=float)
            lo = float(np.linalg.eigvalsh((B + B.T) / 2.0).min())
            if lo < -PSD_TOL * max(1.0, float(np.abs(B).max())):
                raise PSDViolation(
                    f"kernel minor on points {[i + 1 for i in tri]} has eigenvalue {lo:.6g} < 0"
                )


@dataclass
class SvmResult:
    """Reported weights and the run's constants.

    ``lam`` is whichever of the averaged iterate and the best single
    iterate has the smaller objective; ``source`` says which.
    """

    lam: np.ndarray
    objective: float
    knorm: float
    iterations: int
    spectral_bound: float
    sigma: float
    rho: float
    diameter: float
    planned_iterations: int
    eta: float
    source: str
    average_objective: float
    best_iterate_objective: float
    max_subgradient_nnz: int
    max_subgradient_norm: float

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.lam))

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "knorm": self.knorm,
            "iterations": self.iterations,
            "nnz_lambda": self.nnz,
            "spectral_bound": self.spectral_bound,
            "source": self.source,
            "average_objective": self.average_objective,
            "best_iterate_objective": self.best_iterate_objective,
        }

    def constants(self) -> dict:
        return {
            "sigma": self.sigma,
            "rho": self.rho,
            "D": self.diameter,
            "T": self.planned_iterations,
            "eta": self.eta,
            "sigma_rule": "max(2/eps, spectral_bound + eps/2)",
            "T_rule": "ceil(2 D sigma rho^2 / eps^2)",
        }


def svm_constants(prob: SvmProblem, bound: float) -> tuple[float, float, float, int]:
    """``(sigma, rho, D, T)`` for the given spectral bound."""
    eps = prob.eps
    sigma = max(2.0 / eps, bound + eps / 2.0)
    rho = 2.0 * math.sqrt(prob.cap)
    D = 0.5
    T = int(math.ceil(2.0 * D * sigma * rho * rho / (eps * eps) - 1e-9))
    return sigma, rho, D, max(T, 1)


def _sparse_objective(prob: SvmProblem, lam: np.ndarray) -> float:
    """``lam^T K~ lam`` from the kernel restricted to the support of ``lam``."""
    idx = np.flatnonzero(lam)
    if len(idx) == 0:
        return 0.0
    B = kernel_block(prob.kernel, prob.data, idx, idx)
    w = lam[idx]
    return float(w @ B @ w + prob.kernel.shift * np.dot(w, w))


def nu_svm_train(
    prob: SvmProblem,
    T_override: Optional[int] = None,
    *,
    refine_bound: bool = False,
    callback: Optional[Callable] = None,
) -> SvmResult:
    """Train by Mirror Descent; returns the better of average and best iterate.

    Parameters
    ----------
    prob : SvmProblem
    T_override : int, optional
        Replaces ``ceil(2 D sigma rho^2 / eps^2)``; the step size follows.
    refine_bound : bool
        Use the top eigenvalue of a precomputed kernel instead of its trace.
    callback : callable, optional
        ``callback(t, y, lam_t)`` after every step, for inspection.
    """
    bound = spectral_bound(prob.kernel, prob.data, refine=refine_bound)
    sigma, rho, D, T = svm_constants(prob, bound)
    if T_override is not None:
        T = int(T_override)
    lmo = rch_lmo(prob.labels, prob.cap)
    n = prob.n

    mm = MirrorMapSpec(
        dual_gradient=lambda z: svm_mirror_gradient(z, prob.kernel, prob.data),
        sigma=sigma,
        diameter=D,
        dim=n,
        dual_norm=l2_norm,
    )
    counts: dict = {}
    lams: dict = {}
    objs: dict = {}
    stats = {"nnz": 0, "norm": 0.0}

    def subgrad(y):
        vid, lam = lmo(y)
        if vid not in lams:
            lams[vid] = lam
            objs[vid] = _sparse_objective(prob, lam)
        return -lam, vid

    def on_step(t, y, g, vid):
        counts[vid] = counts.get(vid, 0) + 1
        stats["nnz"] = max(stats["nnz"], int(np.count_nonzero(g)))
        stats["norm"] = max(stats["norm"], l2_norm(g))
        if callback is not None:
            callback(t, y, lams[vid])
        return False

    trace = mirror_descent(mm, subgrad, rho, T, callback=on_step)
    used = trace.iterations
    avg = np.zeros(n)
    for vid in counts:
        avg += (counts[vid] / used) * lams[vid]
    avg_obj = _sparse_objective(prob, avg)
    best_vid = min(objs, key=lambda v: (objs[v], v))
    best_obj = objs[best_vid]
    if best_obj < avg_obj:
        lam, obj, source = lams[best_vid].copy(), best_obj, "best_iterate"
    else:
        lam, obj, source = avg, avg_obj, "average"
    return SvmResult(
        lam=lam,
        objective=obj,
        knorm=_sqrt_radicand(obj),
        iterations=used,
        spectral_bound=bound,
        sigma=sigma,
        rho=rho,
        diameter=D,
        planned_iterations=T,
        eta=prob.cap,
        source=source,
        average_objective=avg_obj,
        best_iterate_objective=best_obj,
        max_subgradient_nnz=stats["nnz"],
        max_subgradient_norm=stats["norm"],
    )


def decision_score(result: SvmResult, spec: KernelSpec, data, query) -> float:
    """``sum_i lam_i k(x_i, query)``, without intercept.

    For a precomputed kernel ``query`` is the row of kernel values
    ``k(x_i, query)`` over the training points.
    """
    lam = result.lam
    idx = np.flatnonzero(lam)
    if len(idx) == 0:
        return 0.0
    if spec.kind == "precomputed":
        row = np.asarray(query, dtype=float)[idx]
    else:
        X = np.asarray(data, dtype=float)
        q = np.asarray(query, dtype=float).reshape(1, -1)
        both = np.vstack([X[idx], q])
        row = kernel_block(spec, both, np.arange(len(idx)), [len(idx)])[:, 0]
    return float(np.dot(lam[idx], row))


def class_grid(k: int, cap: float, step: float = 0.01) -> np.ndarray:
    """All ``k``-vectors on a ``step`` grid with entries in ``[0, cap]`` summing to one.

    Exponential in ``k``; meant for brute-force checks with ``k <= 5``.
    """
    units = int(round(1.0 / step))
    cap_units = int(math.floor(cap * units + 1e-9))
    rows = []

    def rec(prefix, left, slots):
        if slots == 1:
            if left <= cap_units:
                rows.append(prefix + [left])
            return
        for a in range(0, min(left, cap_units) + 1):
            rec(prefix + [a], left - a, slots - 1)

    rec([], units, k)
    return np.array(rows, dtype=float).reshape(-1, k) * step


def grid_minimum(prob: SvmProblem, step: float = 0.01) -> float:
    """Smallest ``||lam||_{K~}`` over the ``step`` grid of ``S_eta``, with dense ``K~``."""
    K = kernel_matrix(prob.kernel, prob.data)
    pos = np.flatnonzero(prob.labels > 0)
    neg = np.flatnonzero(prob.labels < 0)
    A = class_grid(len(pos), prob.cap, step)
    B = class_grid(len(neg), prob.cap, step)
    if len(A) == 0 or len(B) == 0:
        raise ParameterError("grid has no feasible point; refine the step")
    Kpp = K[np.ix_(pos, pos)]
    Knn = K[np.ix_(neg, neg)]
    Kpn = K[np.ix_(pos, neg)]
    qa = np.einsum("ij,jk,ik->i", A, Kpp, A)
    qb = np.einsum("ij,jk,ik->i", B, Knn, B)
    vals = qa[:, None] - 2.0 * (A @ Kpn @ B.T) + qb[None, :]
    return _sqrt_radicand(float(vals.min()))
