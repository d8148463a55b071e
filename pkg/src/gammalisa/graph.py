"""Sparse binary weight graphs over regions.

A :class:`WeightGraph` wraps a symmetric, zero-diagonal, 0/1 CSR matrix
together with its degree vector.  Graphs are built from edge lists or as
rook-adjacency lattices, and :func:`lag_matrix` produces the graph whose
edges join vertices at exact graph distance ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Raised for malformed graph input (bad ids, self-loops)."""


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int

    def __post_init__(self):
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise GraphError(f"grid dimensions must be >= 1, got {self.rows}x{self.cols}")

    @property
    def n(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True, eq=False)
class WeightGraph:
    """Symmetric binary weight matrix with cached degrees.

    Use :func:`from_edge_list`, :func:`grid` or :meth:`from_sparse` rather
    than the constructor; they enforce the invariants.
    """

    adjacency: sp.csr_matrix
    degrees: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        """Number of undirected edges."""
        return int(self.adjacency.nnz // 2)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(E, 2)`` array with ``src < dst``, sorted."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        e = np.column_stack([coo.row, coo.col]).astype(np.int64)
        if len(e):
            e = e[np.lexsort((e[:, 1], e[:, 0]))]
        return e

    def to_dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    @classmethod
    def from_sparse(cls, mat) -> "WeightGraph":
        """Binarize and validate an arbitrary square sparse/dense matrix."""
        a = sp.csr_matrix(mat, dtype=np.float64)
        if a.shape[0] != a.shape[1]:
            raise GraphError(f"weight matrix must be square, got {a.shape}")
        a.eliminate_zeros()
        a.data[:] = 1.0
        if a.diagonal().any():
            i = int(np.flatnonzero(a.diagonal())[0])
            raise GraphError(f"self-loop at vertex {i}")
        if (a != a.T).nnz:
            raise GraphError("weight matrix is not symmetric")
        a.sort_indices()
        deg = np.asarray(a.sum(axis=1)).ravel().astype(np.int64)
        return cls(a, deg)

    def __eq__(self, other):
        if not isinstance(other, WeightGraph):
            return NotImplemented
        return self.n == other.n and (self.adjacency != other.adjacency).nnz == 0


def from_edge_list(edges: Iterable[tuple[int, int]], n: int) -> WeightGraph:
    """Build an undirected binary graph on ``n`` vertices.

    Either orientation of an edge is accepted and duplicates collapse.
    """
    n = int(n)
    if n < 0:
        raise GraphError("vertex count must be non-negative")
    e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    bad = (e < 0) | (e >= n)
    if bad.any():
        r = int(np.flatnonzero(bad.any(axis=1))[0])
        raise GraphError(f"edge {r} {tuple(e[r])} has vertex id outside [0, {n})")
    loops = e[:, 0] == e[:, 1]
    if loops.any():
        v = int(e[np.flatnonzero(loops)[0], 0])
        raise GraphError(f"self-loop at vertex {v}")
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    # duplicates were summed by the constructor
    a.data[:] = 1.0
    return WeightGraph.from_sparse(a)


def grid(spec: GridSpec) -> WeightGraph:
    """Rook lattice; vertex ``(r, c)`` has index ``r * cols + c``."""
    rows, cols = spec.rows, spec.cols
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    vert = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    return from_edge_list(np.vstack([horiz, vert]), rows * cols)


def lag_matrix(g: WeightGraph, k: int) -> WeightGraph:
    """Graph linking vertex pairs at shortest-path distance exactly ``k``.

    The distance-0 relation is the identity, which has no off-diagonal
    pairs, so ``k = 0`` gives the empty graph.  :func:`lag_support` returns
    the identity itself.

    Runs a simultaneous breadth-first search from every vertex, one frontier
    expansion per hop, so the cost is ``O(k * nnz(reached))`` rather than
    dense matrix powers.
    """
    if k < 0:
        raise GraphError(f"lag order must be >= 0, got {k}")
    support = lag_support(g, k)
    if k == 0:
        return WeightGraph.from_sparse(sp.csr_matrix((g.n, g.n)))
    return WeightGraph.from_sparse(support)


def lag_support(g: WeightGraph, k: int) -> sp.csr_matrix:
    """Boolean CSR matrix of the distance-``k`` relation (``k = 0`` gives I)."""
    n = g.n
    eye = sp.identity(n, dtype=bool, format="csr")
    if k == 0:
        return eye
    w = g.adjacency.astype(bool)
    reached = eye
    frontier = eye
    for _ in range(k):
        nxt = (frontier @ w).astype(bool)
        # drop anything already reached at a shorter distance
        frontier = (nxt > reached).tocsr()
        frontier.eliminate_zeros()
        if frontier.nnz == 0:
            break
        reached = (reached + frontier).astype(bool)
    return frontier.tocsr()
