import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsecara.errors import InfeasibleError, InputError, MatroidContractError, ParameterError
from sparsecara.lower_bounds import sylvester
from sparsecara.oracles import (
    DagFlowNetwork,
    Matroid,
    dag_path_oracle,
    explicit_oracle,
    graphic_matroid,
    matroid_base_oracle,
    matroid_rank,
    partition_matroid,
    rch_lmo,
    rch_oracle,
    rch_remainder,
    rch_vertex,
    submodular_base_oracle,
    translated_oracle,
    uniform_matroid,
)
from sparsecara.submodular import SubmodularOracle, cut_function


# -- explicit ----------------------------------------------------------------


def test_explicit_identity():
    vid, v = explicit_oracle(np.eye(3))([3.0, 1.0, 2.0])
    assert vid == 1
    np.testing.assert_array_equal(v, [0, 1, 0])


def test_explicit_hadamard_tie():
    V = sylvester(4) / 2.0
    vid, v = explicit_oracle(V)([1.0, 0, 0, 0])
    assert vid == 0
    assert float(v[0]) == 0.5


def test_explicit_counts_calls():
    o = explicit_oracle(np.eye(2))
    o([1, 0])
    o([0, 1])
    assert o.calls == 2


@given(st.integers(0, 2**31))
def test_explicit_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(5, 7))
    c = rng.normal(size=5)
    vid, v = explicit_oracle(V)(c)
    vals = c @ V
    assert vals[vid] == vals.min()
    assert vid == int(np.flatnonzero(vals == vals.min())[0])


def test_translated_oracle():
    V = np.eye(2)
    o = translated_oracle(explicit_oracle(V), [0.5, 0.5])
    vid, v = o([1.0, 0.0])
    assert vid == 1
    np.testing.assert_array_equal(v, [-0.5, 0.5])
    np.testing.assert_array_equal(o.resolve(0), [0.5, -0.5])


# -- matroids ----------------------------------------------------------------


def base_of(M, c):
    vid, v = matroid_base_oracle(M)(np.asarray(c, dtype=float))
    return vid


def test_uniform_two_smallest():
    assert base_of(uniform_matroid(4, 2), [0.1, 0.4, 0.2, 0.3]) == (0, 2)


def test_graphic_triangle():
    M = graphic_matroid([(0, 1), (1, 2), (0, 2)])
    assert M.rank == 2
    assert base_of(M, [1, 2, 3]) == (0, 1)
    trees = [S for S in itertools.combinations(range(3), 2) if M.independence(S)]
    costs = {S: sum([1, 2, 3][e] for e in S) for S in trees}
    assert min(costs, key=costs.get) == (0, 1)


def test_partition_blockwise():
    M = partition_matroid([[0, 1], [2, 3]], [1, 1])
    assert base_of(M, [5, 1, 2, 7]) == (1, 2)


def test_at_most_n_queries_per_call(rng):
    edges = [(a, b) for a in range(6) for b in range(a + 1, 6)]
    M = graphic_matroid(edges)
    o = matroid_base_oracle(M)
    for _ in range(50):
        before = M.queries
        o(rng.normal(size=M.n))
        assert M.queries - before <= M.n


def test_greedy_cannot_complete_base():
    broken = Matroid(3, 3, lambda S: len(S) <= 2, "uniform")
    with pytest.raises(MatroidContractError):
        matroid_base_oracle(broken)(np.zeros(3))


def test_matroid_constructors_validate():
    with pytest.raises(ParameterError):
        uniform_matroid(2, 3)
    with pytest.raises(ParameterError):
        partition_matroid([[0, 1], [1, 2]])
    with pytest.raises(ParameterError):
        partition_matroid([[0], [1]], [1])


def all_bases(M):
    return [S for S in itertools.combinations(range(M.n), M.rank) if M.independence(S)]


def random_matroid(rng):
    kind = rng.integers(3)
    if kind == 0:
        n = int(rng.integers(2, 7))
        return uniform_matroid(n, int(rng.integers(1, n + 1)))
    if kind == 1:
        n = int(rng.integers(2, 8))
        cut = sorted(rng.choice(np.arange(1, n), size=int(rng.integers(0, min(3, n - 1) + 1)), replace=False))
        blocks = [list(b) for b in np.split(np.arange(n), cut) if len(b)]
        caps = [int(rng.integers(1, len(b) + 1)) for b in blocks]
        return partition_matroid(blocks, caps, n)
    nv = int(rng.integers(3, 6))
    edges = [(int(a), int(b)) for a, b in rng.integers(0, nv, size=(int(rng.integers(3, 8)), 2))]
    return graphic_matroid(edges, nv)


@given(st.integers(0, 2**31))
def test_matroid_oracle_vs_enumeration(seed):
    rng = np.random.default_rng(seed)
    M = random_matroid(rng)
    bases = all_bases(M)
    c = rng.normal(size=M.n)
    vid = base_of(M, c)
    assert vid in bases
    best = min(sum(c[e] for e in B) for B in bases)
    assert sum(c[e] for e in vid) <= best + 1e-12


@given(st.integers(0, 2**31))
def test_matroid_axioms_sampled(seed):
    rng = np.random.default_rng(seed)
    M = random_matroid(rng)
    indep = [S for k in range(M.n + 1) for S in itertools.combinations(range(M.n), k) if M.independence(S)]
    # hereditary
    for S in indep[:: max(1, len(indep) // 20)]:
        for k in range(len(S)):
            for T in itertools.combinations(S, k):
                assert M.independence(T)
    # exchange
    for _ in range(20):
        A = indep[int(rng.integers(len(indep)))]
        B = indep[int(rng.integers(len(indep)))]
        if len(A) < len(B):
            assert any(M.independence(tuple(sorted(A + (e,)))) for e in B if e not in A)
    assert matroid_rank(M, range(M.n)) == M.rank


# -- DAG paths ---------------------------------------------------------------


def dag(n, arcs, s, t, flow=None, order=None):
    flow = [0.0] * len(arcs) if flow is None else flow
    return DagFlowNetwork(n, arcs, flow, s, t, list(range(n)) if order is None else order)


def test_parallel_arcs():
    G = dag(2, [(0, 1), (0, 1)], 0, 1)
    assert dag_path_oracle(G)([2.0, -1.0])[0] == (1,)


def test_diamond():
    G = dag(4, [(0, 1), (1, 3), (0, 2), (2, 3)], 0, 3)
    vid, v = dag_path_oracle(G)([1.0, 1.0, 0.5, 2.0])
    assert vid == (0, 1)
    np.testing.assert_array_equal(v, [1, 1, 0, 0])


def test_negative_weights():
    G = dag(3, [(0, 1), (1, 2), (0, 2)], 0, 2)
    vid, _ = dag_path_oracle(G)([-3.0, -3.0, -5.0])
    assert vid == (0, 1)


def test_unreachable_sink():
    G = dag(3, [(0, 1)], 0, 2)
    with pytest.raises(InfeasibleError):
        dag_path_oracle(G)([1.0])


@given(st.integers(0, 2**31))
def test_dag_oracle_vs_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    arcs = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.6]
    arcs.append((0, n - 1))
    G = dag(n, arcs, 0, n - 1)
    paths = G.paths()
    c = rng.normal(size=len(arcs))
    vid, _ = dag_path_oracle(G)(c)
    assert vid in paths
    assert sum(c[k] for k in vid) <= min(sum(c[k] for k in P) for P in paths) + 1e-12


def test_dag_validation():
    good = dag(3, [(0, 1), (1, 2)], 0, 2, flow=[1.0, 1.0])
    good.validate()
    with pytest.raises(InputError, match="node 2"):
        dag(3, [(0, 1), (1, 2)], 0, 2, flow=[1.0, 0.5]).validate()
    with pytest.raises(InputError, match="topological"):
        dag(3, [(0, 1), (1, 2)], 0, 2, flow=[1.0, 1.0], order=[1, 0, 2]).validate()
    with pytest.raises(InputError, match="negative"):
        dag(2, [(0, 1), (0, 1)], 0, 1, flow=[1.5, -0.5]).validate()


# -- submodular base polytope -------------------------------------------------


def test_modular_cardinality_gives_ones():
    f = SubmodularOracle(4, lambda S: len(S))
    _, q = submodular_base_oracle(f)([0.3, -1.0, 2.0, 0.0])
    np.testing.assert_array_equal(q, np.ones(4))


def test_truncated_cardinality():
    f = SubmodularOracle(2, lambda S: min(len(S), 1))
    _, x = submodular_base_oracle(f)([0.5, 0.2])
    np.testing.assert_array_equal(x, [0.0, 1.0])
    c = np.array([0.5, 0.2])
    assert float(c @ x) == 0.2 == min(c @ [1, 0], c @ [0, 1])


def test_single_edge_cut():
    f = cut_function(2, [(0, 1, 1.0)])
    _, x = submodular_base_oracle(f)([1.0, 2.0])
    np.testing.assert_array_equal(x, [1.0, -1.0])
    # B_f has vertices (1,-1) and (-1,1)
    assert float(np.dot([1, 2], x)) == min(1 - 2, -1 + 2)


def test_exactly_n_evaluations():
    f = cut_function(5, [(0, 1, 2.0), (2, 3, 1.0), (1, 4, 3.0)])
    o = submodular_base_oracle(f)
    before = f.query_count
    o(np.arange(5.0))
    assert f.query_count - before == 5


@given(st.integers(0, 2**31))
def test_greedy_vertex_in_base_polytope(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    edges = [(a, b, int(rng.integers(0, 6))) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.4]
    f = cut_function(n, edges, rng.integers(-5, 6, size=n))
    _, x = submodular_base_oracle(f)(rng.normal(size=n))
    full = f.raw(range(n)) - f.raw(())
    assert float(np.sum(x)) == full
    for k in range(1, n):
        for A in itertools.combinations(range(n), k):
            assert float(np.sum(x[list(A)])) <= f.raw(A) - f.raw(()) + 1e-9


def test_greedy_vertex_full_check_n12(rng):
    n = 12
    edges = [(a, b, int(rng.integers(0, 4))) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.3]
    f = cut_function(n, edges, rng.integers(-3, 4, size=n))
    _, x = submodular_base_oracle(f)(rng.normal(size=n))
    assert float(np.sum(x)) == f.raw(range(n)) - f.raw(())
    vals = np.array([f.raw([i for i in range(n) if m >> i & 1]) for m in range(1 << n)]) - f.raw(())
    sums = np.array([x[[i for i in range(n) if m >> i & 1]].sum() for m in range(1 << n)])
    assert np.all(sums <= vals + 1e-9)


@given(st.integers(0, 2**31))
def test_greedy_minimizes_over_vertices(seed):
    # n <= 3: the vertices are the greedy vectors of all orders
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    edges = [(a, b, int(rng.integers(0, 4))) for a in range(n) for b in range(a + 1, n)]
    f = cut_function(n, edges, rng.integers(-3, 4, size=n))
    verts = []
    for perm in itertools.permutations(range(n)):
        q = np.zeros(n)
        for k in range(n):
            q[perm[k]] = f.raw(perm[: k + 1]) - f.raw(perm[:k])
        verts.append(q)
    c = rng.normal(size=n)
    _, x = submodular_base_oracle(f)(c)
    assert float(c @ x) <= min(float(c @ v) for v in verts) + 1e-12


# -- restricted hull -----------------------------------------------------------


def test_rch_eta_one():
    lam = rch_oracle([3, 1, 2, 5], [1, 1, -1, -1], 1.0)
    np.testing.assert_array_equal(lam, [0, 1, 0, -1])
    assert float(np.dot([3, 1, 2, 5], lam)) == -4


def test_rch_eta_half():
    lam = rch_oracle([3, 1, 2, 5], [1, 1, -1, -1], 0.5)
    np.testing.assert_array_equal(lam, [0.5, 0.5, -0.5, -0.5])
    assert float(np.dot([3, 1, 2, 5], lam)) == -1.5


def test_rch_single_pair(rng):
    for _ in range(5):
        np.testing.assert_array_equal(rch_oracle(rng.normal(size=2), [1, -1], 1.0), [1, -1])


def test_rch_infeasible():
    with pytest.raises(ParameterError):
        rch_oracle([0, 0, 0], [1, -1, -1], 0.5)
    with pytest.raises(ParameterError):
        rch_oracle([0, 0], [1, 1], 1.0)


def test_rch_remainder():
    assert rch_remainder(0.5) == (2, 0.0)
    full, rem = rch_remainder(0.3)
    assert full == 3 and rem == pytest.approx(0.1)


def rch_vertices(labels, eta):
    """Enumerate vertices of S_eta: each class takes caps on a set plus one remainder."""
    labels = np.asarray(labels)
    full, rem = rch_remainder(eta)
    out = []

    def side(idx):
        res = []
        for F in itertools.permutations(idx, full + (1 if rem > 0 else 0)):
            w = np.zeros(len(labels))
            w[list(F[:full])] = eta
            if rem > 0:
                w[F[full]] = rem
            res.append(w)
        return res

    for a in side(np.flatnonzero(labels > 0)):
        for b in side(np.flatnonzero(labels < 0)):
            out.append(a - b)
    return out


@given(st.integers(0, 2**31))
def test_rch_vs_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    labels = np.array([1, -1] + list(rng.choice([1, -1], size=n - 2)))
    small = min(np.sum(labels > 0), np.sum(labels < 0))
    eta = float(rng.uniform(1.0 / small, 1.0))
    y = rng.normal(size=n)
    vid, lam = rch_vertex(y, labels, eta)
    full, rem = rch_remainder(eta)
    assert np.count_nonzero(lam) <= 2 * math.ceil(1 / eta)
    assert np.linalg.norm(lam) <= 2 * math.sqrt(eta) + 1e-12
    assert lam[labels > 0].sum() == pytest.approx(1.0, abs=1e-12)
    assert lam[labels < 0].sum() == pytest.approx(-1.0, abs=1e-12)
    assert np.all(np.abs(lam) <= eta + 1e-12)
    best = min(float(y @ v) for v in rch_vertices(labels, eta))
    assert float(y @ lam) <= best + 1e-12
    np.testing.assert_array_equal(rch_lmo(labels, eta).resolve(vid), lam)
