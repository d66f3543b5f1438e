"""Linear-minimization oracles (LMOs) over vertex families.

Every oracle maps a weight vector ``c`` to ``(vertex_id, v)`` where ``v``
minimizes ``c . v`` over the family.  Ties are always broken towards the
smallest index so that runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    InfeasibleError,
    InputError,
    MatroidContractError,
    NumericFailure,
    ParameterError,
)


class LinearMinimizationOracle:
    """Callable wrapper ``c -> (vertex_id, vertex)`` with a call counter.

    Parameters
    ----------
    fn : callable
        The minimization routine.
    dim : int
        Length of the returned vertex vectors.
    name : str
        Used in error messages and reports.
    resolve : callable, optional
        ``vertex_id -> vector``; lets results be re-materialized by id.
    """

    def __init__(self, fn, dim, name="lmo", resolve=None):
        self._fn = fn
        self.dim = int(dim)
        self.name = name
        self._resolve = resolve
        self.calls = 0

    def __call__(self, c):
        self.calls += 1
        return self._fn(np.asarray(c, dtype=float))

    def resolve(self, vertex_id) -> np.ndarray:
        if self._resolve is None:
            raise LookupError(f"oracle {self.name!r} cannot resolve vertex ids")
        return self._resolve(vertex_id)

    def __repr__(self):
        return f"LinearMinimizationOracle({self.name!r}, dim={self.dim})"


def _stable_order(c) -> np.ndarray:
    # ascending weight, ties by ascending index
    return np.argsort(c, kind="stable")


# ---------------------------------------------------------------------------
# explicit vertex matrix


def explicit_oracle(V) -> LinearMinimizationOracle:
    """LMO over the columns of a dense ``d x m`` matrix."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ParameterError("vertex matrix must be two-dimensional")
    if not np.all(np.isfinite(V)):
        raise NumericFailure("vertex matrix has non-finite entries")
    VT = np.ascontiguousarray(V.T)

    def fn(c):
        i = int(np.argmin(VT @ c))
        return i, VT[i]

    def resolve(i):
        if not isinstance(i, (int, np.integer)) or not 0 <= i < VT.shape[0]:
            raise LookupError(f"no column {i!r}")
        return VT[int(i)]

    return LinearMinimizationOracle(fn, V.shape[0], name="explicit", resolve=resolve)


def translated_oracle(oracle: LinearMinimizationOracle, shift) -> LinearMinimizationOracle:
    """Oracle over ``{v - shift}``; the minimizer is unchanged by translation."""
    shift = np.asarray(shift, dtype=float)

    def fn(c):
        vid, v = oracle(c)
        return vid, np.asarray(v, dtype=float) - shift

    def resolve(vid):
        return oracle.resolve(vid) - shift

    return LinearMinimizationOracle(fn, oracle.dim, name=oracle.name + "-shifted", resolve=resolve)


# ---------------------------------------------------------------------------
# matroids


class _DisjointSets:
    def __init__(self):
        self.parent = {}

    def find(self, a):
        parent = self.parent
        root = a
        while parent.get(root, root) != root:
            root = parent[root]
        while a != root:
            nxt = parent.get(a, a)
            parent[a] = root
            a = nxt
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


@dataclass
class Matroid:
    """A matroid on ``{0..n-1}`` accessed through an independence test.

    ``queries`` counts calls to :meth:`is_independent`.
    """

    n: int
    rank: int
    independence: Callable[[Sequence[int]], bool]
    kind: str
    data: dict = field(default_factory=dict, repr=False)
    queries: int = 0

    def is_independent(self, S) -> bool:
        self.queries += 1
        return bool(self.independence(S))


def uniform_matroid(n: int, r: int) -> Matroid:
    if not 0 <= r <= n:
        raise ParameterError(f"uniform matroid needs 0 <= r <= n, got r={r}, n={n}")
    return Matroid(n, r, lambda S: len(S) <= r, "uniform", {"r": r})


def partition_matroid(blocks, capacities=None, n=None) -> Matroid:
    """Partition matroid: at most ``capacities[b]`` elements from block ``b``."""
    blocks = [tuple(int(e) for e in b) for b in blocks]
    if capacities is None:
        capacities = [1] * len(blocks)
    if len(capacities) != len(blocks):
        raise ParameterError("one capacity per block is required")
    owner = {}
    for b, elems in enumerate(blocks):
        for e in elems:
            if e in owner:
                raise ParameterError(f"element {e} appears in two blocks")
            owner[e] = b
    if n is None:
        n = max(owner) + 1 if owner else 0
    if any(e < 0 or e >= n for e in owner):
        raise ParameterError("block element out of range")
    caps = [int(c) for c in capacities]
    rank = sum(min(c, len(b)) for c, b in zip(caps, blocks))

    def indep(S):
        used = [0] * len(blocks)
        for e in S:
            b = owner.get(int(e))
            if b is None:
                # elements outside every block are loops
                return False
            used[b] += 1
            if used[b] > caps[b]:
                return False
        return True

    return Matroid(n, rank, indep, "partition", {"blocks": blocks, "capacities": caps})


def graphic_matroid(edges, n_vertices: Optional[int] = None) -> Matroid:
    """Cycle matroid of an undirected multigraph given as an edge list."""
    edges = [(int(a), int(b)) for a, b in edges]
    if n_vertices is None:
        n_vertices = 1 + max((max(a, b) for a, b in edges), default=-1)
    ds = _DisjointSets()
    forest = 0
    for a, b in edges:
        if ds.union(a, b):
            forest += 1

    def indep(S):
        # fresh union-find per query
        local = _DisjointSets()
        for e in S:
            a, b = edges[int(e)]
            if not local.union(a, b):
                return False
        return True

    return Matroid(len(edges), forest, indep, "graphic", {"edges": edges, "n_vertices": n_vertices})


def matroid_rank(M: Matroid, S) -> int:
    """Rank of ``S`` by greedy extension (uses ``|S|`` independence queries)."""
    base = []
    for e in sorted(int(x) for x in S):
        if M.is_independent(base + [e]):
            base.append(e)
    return len(base)


def matroid_base_oracle(M: Matroid) -> LinearMinimizationOracle:
    """Minimum-weight base by the greedy algorithm; at most ``n`` queries per call."""

    def fn(c):
        if c.shape != (M.n,):
            raise ParameterError(f"weight vector must have length {M.n}")
        base = []
        for e in _stable_order(c):
            if len(base) == M.rank:
                break
            cand = base + [int(e)]
            if M.is_independent(cand):
                base = cand
        if len(base) != M.rank:
            raise MatroidContractError(
                f"greedy built an independent set of size {len(base)}, rank is {M.rank}"
            )
        vid = tuple(sorted(base))
        return vid, _indicator(vid, M.n)

    def resolve(vid):
        return _indicator(vid, M.n)

    return LinearMinimizationOracle(fn, M.n, name=f"matroid-{M.kind}", resolve=resolve)


def _indicator(idx, n) -> np.ndarray:
    v = np.zeros(n)
    v[list(idx)] = 1.0
    return v


# ---------------------------------------------------------------------------
# s-t flows on a DAG


@dataclass
class DagFlowNetwork:
    """Unit s-t flow on a directed acyclic graph (0-indexed nodes and arcs)."""

    n_nodes: int
    arcs: list
    flow: np.ndarray
    source: int
    sink: int
    order: list
    arc_lines: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        self.arcs = [(int(a), int(b)) for a, b in self.arcs]
        self.flow = np.asarray(self.flow, dtype=float)
        self.order = [int(v) for v in self.order]

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def _arc(self, k) -> str:
        if self.arc_lines is not None:
            return f"arc {k + 1} (line {self.arc_lines[k]})"
        return f"arc {k + 1}"

    def validate(self, tol: float = 1e-9) -> None:
        """Check acyclicity (via the order), conservation and unit value."""
        n = self.n_nodes
        if sorted(self.order) != list(range(n)):
            raise InputError("topological order must list every node exactly once")
        pos = {v: i for i, v in enumerate(self.order)}
        for k, (a, b) in enumerate(self.arcs):
            if not (0 <= a < n and 0 <= b < n):
                raise InputError(f"{self._arc(k)} has an endpoint outside 1..{n}")
            if pos[a] >= pos[b]:
                raise InputError(f"{self._arc(k)} ({a + 1}->{b + 1}) goes against the topological order")
        if self.flow.shape != (len(self.arcs),):
            raise InputError("one flow value per arc is required")
        if np.any(self.flow < -tol):
            k = int(np.argmax(self.flow < -tol))
            raise InputError(f"{self._arc(k)} carries negative flow")
        net = np.zeros(n)
        for (a, b), f in zip(self.arcs, self.flow):
            net[a] += f
            net[b] -= f
        for v in range(n):
            want = 1.0 if v == self.source else (-1.0 if v == self.sink else 0.0)
            if abs(net[v] - want) > tol:
                raise InputError(
                    f"flow conservation violated at node {v + 1}: net outflow {net[v]:.12g}, expected {want:g}"
                )

    def paths(self):
        """All s-t paths as tuples of arc indices (exponential; tests only)."""
        out_arcs = [[] for _ in range(self.n_nodes)]
        for k, (a, _) in enumerate(self.arcs):
            out_arcs[a].append(k)
        found = []

        def walk(v, acc):
            if v == self.sink:
                found.append(tuple(acc))
                return
            for k in out_arcs[v]:
                walk(self.arcs[k][1], acc + [k])

        walk(self.source, [])
        return found


def dag_path_oracle(G: DagFlowNetwork) -> LinearMinimizationOracle:
    """Minimum-weight s-t path by one pass over the topological order.

    Arc weights may be negative.  Returns the arc-incidence vector.
    """
    m = G.n_arcs
    out_arcs = [[] for _ in range(G.n_nodes)]
    for k, (a, _) in enumerate(G.arcs):
        out_arcs[a].append(k)
    heads = [b for _, b in G.arcs]

    def fn(c):
        if c.shape != (m,):
            raise ParameterError(f"weight vector must have length {m}")
        cl = c.tolist()
        dist = [math.inf] * G.n_nodes
        pred = [-1] * G.n_nodes
        dist[G.source] = 0.0
        for v in G.order:
            dv = dist[v]
            if dv == math.inf:
                continue
            for k in out_arcs[v]:
                nd = dv + cl[k]
                h = heads[k]
                if nd < dist[h]:
                    dist[h] = nd
                    pred[h] = k
        if dist[G.sink] == math.inf:
            raise InfeasibleError("sink is unreachable from source")
        path = []
        v = G.sink
        while v != G.source:
            k = pred[v]
            path.append(k)
            v = G.arcs[k][0]
        vid = tuple(reversed(path))
        return vid, _indicator(vid, m)

    def resolve(vid):
        return _indicator(vid, m)

    return LinearMinimizationOracle(fn, m, name="dag-path", resolve=resolve)


# ---------------------------------------------------------------------------
# submodular base polytope


def submodular_base_oracle(f) -> LinearMinimizationOracle:
    """Edmonds' greedy vertex of the base polytope ``B_f``.

    ``f`` must expose ``n`` and ``value(S)`` returning the normalized value
    ``f(S) - f(empty)``.  Exactly ``n`` evaluations per call.
    """
    n = f.n

    def fn(c):
        if c.shape != (n,):
            raise ParameterError(f"weight vector must have length {n}")
        order = _stable_order(c)
        q = np.zeros(n)
        prev = 0.0
        prefix = []
        for e in order:
            prefix.append(int(e))
            val = f.value(prefix)
            if not math.isfinite(val):
                raise NumericFailure(f"submodular oracle returned {val!r}")
            q[e] = val - prev
            prev = val
        return tuple(q.tolist()), q

    return LinearMinimizationOracle(fn, n, name="submodular-base", resolve=lambda vid: np.array(vid))


# ---------------------------------------------------------------------------
# restricted convex hulls (nu-SVM)


def _rch_mass(eta: float):
    full = int(math.floor((1.0 + 1e-12) / eta))
    rem = 1.0 - full * eta
    if rem <= 1e-12:
        rem = 0.0
    return full, rem


def rch_vertex(y, labels, eta: float):
    """Minimize ``y . lam`` over ``S_eta``; returns ``(vertex_id, lam)``.

    One unit of positive mass goes to the positive class in ascending order
    of ``y`` and one unit of negative mass to the negative class in
    descending order of ``y``, each coordinate capped at ``eta``.
    The id is ``(plus_full, plus_rem, minus_full, minus_rem)`` with the
    coordinates receiving a full ``eta`` and the one taking the remainder
    (``-1`` when the remainder is zero).
    """
    y = np.asarray(y, dtype=float)
    labels = np.asarray(labels)
    if y.shape != labels.shape:
        raise ParameterError("weights and labels must have the same length")
    pos = np.flatnonzero(labels > 0)
    neg = np.flatnonzero(labels < 0)
    if len(pos) == 0 or len(neg) == 0:
        raise ParameterError("both label classes must be nonempty")
    if not (0 < eta <= 1):
        raise ParameterError(f"eta must lie in (0, 1], got {eta!r}")
    if eta * len(pos) < 1 - 1e-12 or eta * len(neg) < 1 - 1e-12:
        raise ParameterError("eta * class size must be >= 1 for S_eta to be nonempty")
    full, rem = _rch_mass(eta)

    lam = np.zeros(len(y))
    # ascending y on the positive class, descending on the negative class
    p_order = pos[np.argsort(y[pos], kind="stable")]
    n_order = neg[np.argsort(-y[neg], kind="stable")]
    p_full = tuple(int(i) for i in p_order[:full])
    n_full = tuple(int(i) for i in n_order[:full])
    lam[list(p_full)] = eta
    lam[list(n_full)] = -eta
    p_rem = n_rem = -1
    if rem > 0:
        p_rem = int(p_order[full])
        n_rem = int(n_order[full])
        lam[p_rem] = rem
        lam[n_rem] = -rem
    return (p_full, p_rem, n_full, n_rem), lam


def rch_oracle(y, labels, eta: float) -> np.ndarray:
    """The minimizing vector of :func:`rch_vertex`."""
    return rch_vertex(y, labels, eta)[1]


def rch_lmo(labels, eta: float) -> LinearMinimizationOracle:
    """:func:`rch_vertex` packaged as an oracle object."""
    labels = np.asarray(labels)
    full, rem = _rch_mass(eta)

    def resolve(vid):
        p_full, p_rem, n_full, n_rem = vid
        lam = np.zeros(len(labels))
        lam[list(p_full)] = eta
        lam[list(n_full)] = -eta
        if p_rem >= 0:
            lam[p_rem] = rem
            lam[n_rem] = -rem
        return lam

    return LinearMinimizationOracle(
        lambda c: rch_vertex(c, labels, eta), len(labels), name="rch", resolve=resolve
    )


def rch_remainder(eta: float) -> tuple[int, float]:
    """Number of coordinates at full cap and the leftover mass per class."""
    return _rch_mass(eta)
