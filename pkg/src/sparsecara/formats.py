"""Readers and writers for the text and binary input formats.

All text formats ignore blank lines and anything after ``#``.  Indices in
files are 1-based; the in-memory objects are 0-based.  Errors raise
:class:`InputError` naming the file line.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .errors import InputError
from .oracles import DagFlowNetwork, Matroid, graphic_matroid, partition_matroid, uniform_matroid

BINARY_MAGIC = b"CARA1"


def _lines(path) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, tokens)`` for non-empty lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].split()
            if body:
                yield no, body


def _reals(tokens, no, path) -> list[float]:
    out = []
    for col, tok in enumerate(tokens, start=1):
        try:
            v = float(tok)
        except ValueError:
            raise InputError(f"{path}: line {no}, column {col}: {tok!r} is not a number") from None
        if not math.isfinite(v):
            raise InputError(f"{path}: line {no}, column {col}: non-finite value {tok!r}")
        out.append(v)
    return out


def _ints(tokens, no, path, what="integer") -> list[int]:
    out = []
    for col, tok in enumerate(tokens, start=1):
        try:
            out.append(int(tok))
        except ValueError:
            raise InputError(f"{path}: line {no}, column {col}: {tok!r} is not an {what}") from None
    return out


# ---------------------------------------------------------------------------
# dense matrices and vectors


def read_matrix(path) -> np.ndarray:
    """``d x m`` matrix from the text format or the ``CARA1`` binary format.

    Text: a header line ``d m`` followed by ``m`` lines, each one column of
    ``d`` reals.  The binary variant is detected by its magic bytes.
    """
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
    if head == BINARY_MAGIC:
        return read_matrix_binary(path)
    it = _lines(path)
    try:
        no, toks = next(it)
    except StopIteration:
        raise InputError(f"{path}: empty matrix file") from None
    if len(toks) != 2:
        raise InputError(f"{path}: line {no}: header must be 'd m'")
    d, m = _ints(toks, no, path)
    if d < 1 or m < 1:
        raise InputError(f"{path}: line {no}: dimensions must be positive")
    cols = []
    for no, toks in it:
        if len(cols) == m:
            raise InputError(f"{path}: line {no}: more than the declared {m} columns")
        if len(toks) != d:
            raise InputError(f"{path}: line {no}: column {len(cols) + 1} has {len(toks)} entries, expected {d}")
        cols.append(_reals(toks, no, path))
    if len(cols) != m:
        raise InputError(f"{path}: found {len(cols)} columns, header declares {m}")
    return np.array(cols, dtype=float).T.reshape(d, m)


def read_matrix_binary(path) -> np.ndarray:
    """``CARA1`` magic, little-endian uint64 ``d`` and ``m``, then columns as float64."""
    raw = Path(path).read_bytes()
    off = len(BINARY_MAGIC)
    if raw[:off] != BINARY_MAGIC:
        raise InputError(f"{path}: missing CARA1 magic")
    if len(raw) < off + 16:
        raise InputError(f"{path}: truncated header")
    d, m = struct.unpack_from("<QQ", raw, off)
    off += 16
    want = 8 * d * m
    if len(raw) - off != want:
        raise InputError(f"{path}: expected {want} payload bytes for {d}x{m}, found {len(raw) - off}")
    V = np.frombuffer(raw, dtype="<f8", count=d * m, offset=off).reshape(m, d).T.astype(float)
    if not np.all(np.isfinite(V)):
        j = int(np.argmax(~np.all(np.isfinite(V), axis=0)))
        raise InputError(f"{path}: column {j + 1} has non-finite entries")
    return V


def write_matrix(path, V, binary: bool = False) -> None:
    V = np.asarray(V, dtype=float)
    d, m = V.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<QQ", d, m))
            fh.write(np.ascontiguousarray(V.T, dtype="<f8").tobytes())
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{d} {m}\n")
        for j in range(m):
            fh.write(" ".join(repr(float(x)) for x in V[:, j]) + "\n")


def read_vector(path, dim: Optional[int] = None) -> np.ndarray:
    """Whitespace-separated reals over any number of lines."""
    vals: list[float] = []
    for no, toks in _lines(path):
        vals.extend(_reals(toks, no, path))
    if dim is not None and len(vals) != dim:
        raise InputError(f"{path}: vector has {len(vals)} entries, expected {dim}")
    if not vals:
        raise InputError(f"{path}: empty vector file")
    return np.array(vals)


def write_vector(path, x) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(repr(float(v)) for v in np.asarray(x, dtype=float)) + "\n")


# ---------------------------------------------------------------------------
# matroids


def read_graphic(path) -> Matroid:
    """Edge list ``u v`` per line, 1-indexed vertices; edge ``k`` is line ``k``."""
    edges = []
    for no, toks in _lines(path):
        if len(toks) != 2:
            raise InputError(f"{path}: line {no}: expected 'u v'")
        a, b = _ints(toks, no, path)
        if a < 1 or b < 1:
            raise InputError(f"{path}: line {no}: vertices are 1-indexed")
        edges.append((a - 1, b - 1))
    if not edges:
        raise InputError(f"{path}: no edges")
    return graphic_matroid(edges)


def read_uniform(path) -> Matroid:
    """Single line ``n r``."""
    rows = list(_lines(path))
    if len(rows) != 1 or len(rows[0][1]) != 2:
        raise InputError(f"{path}: expected a single line 'n r'")
    no, toks = rows[0]
    n, r = _ints(toks, no, path)
    if not 0 <= r <= n:
        raise InputError(f"{path}: line {no}: need 0 <= r <= n")
    return uniform_matroid(n, r)


def read_partition(path) -> Matroid:
    """Header ``n``, then one block per line: ``capacity e1 e2 ...`` (1-indexed)."""
    it = _lines(path)
    try:
        no, toks = next(it)
    except StopIteration:
        raise InputError(f"{path}: empty partition file") from None
    if len(toks) != 1:
        raise InputError(f"{path}: line {no}: header must be 'n'")
    (n,) = _ints(toks, no, path)
    blocks, caps, seen = [], [], {}
    for no, toks in it:
        vals = _ints(toks, no, path)
        if len(vals) < 2:
            raise InputError(f"{path}: line {no}: expected 'capacity e1 e2 ...'")
        cap, elems = vals[0], vals[1:]
        if cap < 0:
            raise InputError(f"{path}: line {no}: negative capacity")
        for e in elems:
            if not 1 <= e <= n:
                raise InputError(f"{path}: line {no}: element {e} outside 1..{n}")
            if e in seen:
                raise InputError(f"{path}: line {no}: element {e} already in the block on line {seen[e]}")
            seen[e] = no
        blocks.append([e - 1 for e in elems])
        caps.append(cap)
    return partition_matroid(blocks, caps, n)


def read_matroid(path, kind: str) -> Matroid:
    readers = {"graphic": read_graphic, "uniform": read_uniform, "partition": read_partition}
    if kind not in readers:
        raise InputError(f"unknown matroid kind {kind!r}")
    return readers[kind](path)


# ---------------------------------------------------------------------------
# DAG flows


def read_dag(path) -> DagFlowNetwork:
    """Header ``n m s t``, ``m`` arc lines ``tail head flow``, one order line.

    Nodes are 1-indexed.  The network is validated (order, conservation,
    unit value) before it is returned.
    """
    it = _lines(path)
    try:
        no, toks = next(it)
    except StopIteration:
        raise InputError(f"{path}: empty DAG file") from None
    if len(toks) != 4:
        raise InputError(f"{path}: line {no}: header must be 'n m s t'")
    n, m, s, t = _ints(toks, no, path)
    if n < 2 or m < 1:
        raise InputError(f"{path}: line {no}: need n >= 2 and m >= 1")
    for name, v in (("s", s), ("t", t)):
        if not 1 <= v <= n:
            raise InputError(f"{path}: line {no}: {name} = {v} outside 1..{n}")
    if s == t:
        raise InputError(f"{path}: line {no}: source equals sink")
    arcs, flow, arc_lines = [], [], []
    for _ in range(m):
        try:
            no, toks = next(it)
        except StopIteration:
            raise InputError(f"{path}: file ends after {len(arcs)} of {m} arcs") from None
        if len(toks) != 3:
            raise InputError(f"{path}: line {no}: arc must be 'tail head flow'")
        a, b = _ints(toks[:2], no, path)
        (f,) = _reals(toks[2:], no, path)
        for v in (a, b):
            if not 1 <= v <= n:
                raise InputError(f"{path}: line {no}: node {v} outside 1..{n}")
        arcs.append((a - 1, b - 1))
        flow.append(f)
        arc_lines.append(no)
    try:
        no, toks = next(it)
    except StopIteration:
        raise InputError(f"{path}: missing topological order line") from None
    order = _ints(toks, no, path)
    if len(order) != n:
        raise InputError(f"{path}: line {no}: order lists {len(order)} nodes, expected {n}")
    extra = next(it, None)
    if extra is not None:
        raise InputError(f"{path}: line {extra[0]}: unexpected content after the order line")
    G = DagFlowNetwork(n, arcs, flow, s - 1, t - 1, [v - 1 for v in order], arc_lines=arc_lines)
    try:
        G.validate()
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None
    return G


# ---------------------------------------------------------------------------
# set functions


def read_cut(path):
    """Header ``n``; lines ``a b w`` are edges, lines ``i w`` unary terms.

    Returns ``(n, edges, unary)`` with 0-based indices.
    """
    it = _lines(path)
    try:
        no, toks = next(it)
    except StopIteration:
        raise InputError(f"{path}: empty cut file") from None
    if len(toks) != 1:
        raise InputError(f"{path}: line {no}: header must be 'n'")
    (n,) = _ints(toks, no, path)
    if n < 1:
        raise InputError(f"{path}: line {no}: n must be positive")
    edges, unary = [], np.zeros(n)
    for no, toks in it:
        if len(toks) == 3:
            a, b = _ints(toks[:2], no, path)
            (w,) = _reals(toks[2:], no, path)
            if w < 0:
                raise InputError(f"{path}: line {no}: negative edge weight breaks submodularity")
            for v in (a, b):
                if not 1 <= v <= n:
                    raise InputError(f"{path}: line {no}: node {v} outside 1..{n}")
            edges.append((a - 1, b - 1, w))
        elif len(toks) == 2:
            (i,) = _ints(toks[:1], no, path)
            (w,) = _reals(toks[1:], no, path)
            if not 1 <= i <= n:
                raise InputError(f"{path}: line {no}: node {i} outside 1..{n}")
            unary[i - 1] += w
        else:
            raise InputError(f"{path}: line {no}: expected 'a b w' or 'i w'")
    return n, edges, unary


# ---------------------------------------------------------------------------
# classification data


def read_libsvm(path, n_features: Optional[int] = None):
    """Sparse ``label idx:val ...`` lines (1-indexed features).

    Labels are mapped to +1 (positive) and -1 (zero or negative).
    Returns ``(X, y)`` with ``X`` dense.
    """
    rows, labels = [], []
    width = 0
    for no, toks in _lines(path):
        try:
            lab = float(toks[0])
        except ValueError:
            raise InputError(f"{path}: line {no}: label {toks[0]!r} is not a number") from None
        feats = {}
        for col, tok in enumerate(toks[1:], start=2):
            if ":" not in tok:
                raise InputError(f"{path}: line {no}, column {col}: expected 'idx:val', got {tok!r}")
            i_s, v_s = tok.split(":", 1)
            try:
                i, v = int(i_s), float(v_s)
            except ValueError:
                raise InputError(f"{path}: line {no}, column {col}: bad pair {tok!r}") from None
            if i < 1:
                raise InputError(f"{path}: line {no}, column {col}: feature indices are 1-indexed")
            if not math.isfinite(v):
                raise InputError(f"{path}: line {no}, column {col}: non-finite value")
            feats[i - 1] = v
            width = max(width, i)
        rows.append(feats)
        labels.append(1 if lab > 0 else -1)
    if not rows:
        raise InputError(f"{path}: no samples")
    d = width if n_features is None else n_features
    if width > d:
        raise InputError(f"{path}: feature index {width} exceeds the declared {d}")
    X = np.zeros((len(rows), max(d, 1)))
    for r, feats in enumerate(rows):
        for i, v in feats.items():
            X[r, i] = v
    return X, np.array(labels)
