import numpy as np
import pytest

from sparsecara.errors import InputError
from sparsecara.formats import (
    read_cut,
    read_dag,
    read_graphic,
    read_libsvm,
    read_matrix,
    read_matroid,
    read_partition,
    read_uniform,
    read_vector,
    write_matrix,
    write_vector,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_matrix_text_roundtrip(tmp_path, rng):
    V = rng.normal(size=(3, 5))
    write_matrix(tmp_path / "m.txt", V)
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.txt"), V)


def test_matrix_binary_roundtrip(tmp_path, rng):
    V = rng.normal(size=(4, 2))
    write_matrix(tmp_path / "m.bin", V, binary=True)
    assert (tmp_path / "m.bin").read_bytes()[:5] == b"CARA1"
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.bin"), V)


def test_matrix_comments_and_layout(tmp_path):
    p = write(tmp_path, "m.txt", "# columns\n2 2\n1 0  # e1\n\n0 1\n")
    np.testing.assert_array_equal(read_matrix(p), np.eye(2))


@pytest.mark.parametrize(
    "text, msg",
    [
        ("2 2\n1 0\n0\n", "line 3"),
        ("2 2\n1 0\n0 x\n", "line 3, column 2"),
        ("2 1\n1 0\n0 1\n", "line 3"),
        ("2 3\n1 0\n0 1\n", "found 2 columns"),
        ("2\n1 0\n", "line 1"),
        ("", "empty"),
        ("2 1\n1 nan\n", "non-finite"),
    ],
)
def test_matrix_errors(tmp_path, text, msg):
    with pytest.raises(InputError, match=msg):
        read_matrix(write(tmp_path, "m.txt", text))


def test_binary_truncated(tmp_path):
    p = tmp_path / "m.bin"
    write_matrix(p, np.eye(2), binary=True)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(InputError, match="payload"):
        read_matrix(p)


def test_vector(tmp_path):
    write_vector(tmp_path / "v.txt", [0.1, -2.0])
    np.testing.assert_array_equal(read_vector(tmp_path / "v.txt"), [0.1, -2.0])
    p = write(tmp_path, "w.txt", "1 2\n3\n")
    np.testing.assert_array_equal(read_vector(p, 3), [1, 2, 3])
    with pytest.raises(InputError, match="expected 2"):
        read_vector(p, 2)


def test_graphic(tmp_path):
    M = read_graphic(write(tmp_path, "g.txt", "1 2\n2 3\n1 3\n"))
    assert M.n == 3 and M.rank == 2 and M.kind == "graphic"
    with pytest.raises(InputError, match="line 2"):
        read_graphic(write(tmp_path, "bad.txt", "1 2\n0 3\n"))
    with pytest.raises(InputError, match="line 1"):
        read_graphic(write(tmp_path, "bad2.txt", "1 2 3\n"))


def test_uniform_and_partition(tmp_path):
    M = read_uniform(write(tmp_path, "u.txt", "4 2\n"))
    assert (M.n, M.rank) == (4, 2)
    P = read_partition(write(tmp_path, "p.txt", "4\n1 1 2\n1 3 4\n"))
    assert (P.n, P.rank) == (4, 2)
    assert read_matroid(tmp_path / "u.txt", "uniform").rank == 2
    with pytest.raises(InputError, match="line 3"):
        read_partition(write(tmp_path, "p2.txt", "4\n1 1 2\n1 2 3\n"))
    with pytest.raises(InputError):
        read_matroid(tmp_path / "u.txt", "laminar")


DIAMOND = "4 4 1 4\n1 2 0.5\n2 4 0.5\n1 3 0.5\n3 4 0.5\n1 2 3 4\n"


def test_dag(tmp_path):
    G = read_dag(write(tmp_path, "d.txt", DIAMOND))
    assert G.n_nodes == 4 and G.source == 0 and G.sink == 3
    assert G.arcs[1] == (1, 3)
    assert len(G.paths()) == 2


@pytest.mark.parametrize(
    "text, msg",
    [
        ("4 4 1 4\n1 2 0.5\n2 4 0.4\n1 3 0.5\n3 4 0.5\n1 2 3 4\n", "node 2"),
        ("4 4 1 4\n1 2 0.5\n2 4 0.5\n1 3 0.5\n3 4 0.5\n1 4 2 3\n", "order"),
        ("4 4 1 4\n1 2 0.5\n2 4 0.5\n1 3 0.5\n", "ends after 3 of 4 arcs"),
        ("4 4 1 4\n1 2 0.5\n2 4 0.5\n1 3\n3 4 0.5\n1 2 3 4\n", "line 4"),
        ("4 4 1 5\n", "outside"),
        ("4 4 1 4\n1 2 0.5\n2 4 0.5\n1 3 0.5\n3 4 0.5\n1 2 3\n", "line 6"),
        ("3 2 1 3\n1 2 1\n2 3 1\n1 2 3\n9\n", "line 5"),
    ],
)
def test_dag_errors(tmp_path, text, msg):
    with pytest.raises(InputError, match=msg):
        read_dag(write(tmp_path, "d.txt", text))


def test_cut(tmp_path):
    n, edges, unary = read_cut(write(tmp_path, "c.txt", "3\n1 2 1\n3 -2\n1 1\n2 1\n"))
    assert n == 3 and edges == [(0, 1, 1.0)]
    np.testing.assert_array_equal(unary, [1, 1, -2])
    with pytest.raises(InputError, match="negative"):
        read_cut(write(tmp_path, "c2.txt", "2\n1 2 -1\n"))
    with pytest.raises(InputError, match="line 2"):
        read_cut(write(tmp_path, "c3.txt", "2\n1 2 3 4\n"))


def test_libsvm(tmp_path):
    X, y = read_libsvm(write(tmp_path, "s.txt", "+1 1:0.5 3:1\n-1 2:2\n0 1:1\n"))
    np.testing.assert_array_equal(X, [[0.5, 0, 1], [0, 2, 0], [1, 0, 0]])
    np.testing.assert_array_equal(y, [1, -1, -1])
    with pytest.raises(InputError, match="line 1, column 2"):
        read_libsvm(write(tmp_path, "b.txt", "1 0:1\n"))
    with pytest.raises(InputError, match="line 2"):
        read_libsvm(write(tmp_path, "b2.txt", "1 1:1\n1 2-1\n"))


def doc_examples():
    import re
    from pathlib import Path

    text = (Path(__file__).resolve().parents[1] / "docs" / "FORMATS.md").read_text()
    for block in re.findall(r"```text\n(.*?)```", text, flags=re.S):
        first = block.splitlines()[0]
        if first.startswith("# format:"):
            yield first.split(":", 1)[1].strip(), block


def test_documented_examples_parse(tmp_path):
    readers = {
        "matrix": read_matrix,
        "vector": read_vector,
        "graphic": read_graphic,
        "uniform": read_uniform,
        "partition": read_partition,
        "dag": read_dag,
        "cut": read_cut,
        "libsvm": read_libsvm,
    }
    seen = set()
    for kind, block in doc_examples():
        path = tmp_path / f"{kind}.txt"
        path.write_text(block)
        readers[kind](path)
        seen.add(kind)
    assert seen == set(readers)
