"""Sparse directed-graph Laplacian: construction, validation, symmetrization.

Convention: L = D - A^T where A[u, v] = w(u -> v) and D[u, u] is the weighted
out-degree of u.  Columns of L therefore sum to zero; for an Eulerian graph
(in-degree == out-degree at every vertex) the rows sum to zero as well.
Off-diagonal entry L[v, u] = -w(u -> v), so the column of vertex u holds its
out-edges and the row of vertex v holds its in-edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import IndexOutOfRangeError, NegativeWeightError

#: relative tolerance for structural identities (column/row sums), against max diagonal
STRUCTURAL_TOL = 1e-12


class DirectedLaplacian:
    """Immutable sparse directed Laplacian with row and column adjacency access.

    Attributes:
        n: vertex count.
        out_adj: tuple of dicts, out_adj[u][v] = w(u -> v) > 0.
        in_adj: tuple of dicts, in_adj[v][u] = w(u -> v) > 0.
        diag: weighted out-degree per vertex (the diagonal of L).
        diag_in: weighted in-degree per vertex.
        dropped_self_loops: number of self-loop input edges discarded.
    """

    __slots__ = ("n", "out_adj", "in_adj", "diag", "diag_in",
                 "dropped_self_loops", "_csr")

    def __init__(self, n, out_adj, in_adj, diag, diag_in, dropped_self_loops=0):
        self.n = int(n)
        self.out_adj = tuple(out_adj)
        self.in_adj = tuple(in_adj)
        self.diag = np.asarray(diag, dtype=np.float64)
        self.diag_in = np.asarray(diag_in, dtype=np.float64)
        self.dropped_self_loops = int(dropped_self_loops)
        self._csr = None

    # spec aliases used by code shared with the mutable elimination graph
    @property
    def diag_out(self):
        return self.diag

    @property
    def edge_count(self):
        return sum(len(d) for d in self.out_adj)

    @property
    def nnz(self):
        """Stored nonzeros of L: edges plus nonzero diagonal entries."""
        return self.edge_count + int(np.count_nonzero(self.diag))

    def alive_vertices(self):
        return range(self.n)

    @property
    def alive_count(self):
        return self.n

    def edges(self):
        """Yield (u, v, w) triples sorted by (u, v)."""
        for u in range(self.n):
            adj = self.out_adj[u]
            for v in sorted(adj):
                yield u, v, adj[v]

    def weight(self, u, v):
        """Weight of edge u -> v, or 0.0 if absent."""
        return self.out_adj[u].get(v, 0.0)

    def to_dense(self):
        """Dense n x n numpy array of L."""
        m = np.zeros((self.n, self.n))
        np.fill_diagonal(m, self.diag)
        for u, v, w in self.edges():
            m[v, u] -= w
        return m

    def to_csr(self):
        """Cached scipy CSR matrix of L (for matvecs)."""
        if self._csr is None:
            rows, cols, vals = [], [], []
            for u, v, w in self.edges():
                rows.append(v)
                cols.append(u)
                vals.append(-w)
            rows.extend(range(self.n))
            cols.extend(range(self.n))
            vals.extend(self.diag)
            self._csr = sp.csr_matrix(
                (vals, (rows, cols)), shape=(self.n, self.n))
        return self._csr

    def matvec(self, x):
        return self.to_csr() @ np.asarray(x, dtype=np.float64)

    def __repr__(self):
        return f"DirectedLaplacian(n={self.n}, edges={self.edge_count})"


@dataclass(frozen=True)
class ValidationReport:
    """Structural diagnosis of a candidate directed Laplacian."""
    n: int
    column_defect: float          # max_i |sum_j L_ji| relative to max diagonal
    row_defect: float             # max_i |sum_j L_ij| relative to max diagonal
    sign_violations: int          # positive off-diagonals / negative diagonals
    eulerian: bool
    strongly_connected: bool | None   # None when the check was skipped
    scc_count: int | None
    tol: float = STRUCTURAL_TOL


def from_edge_list(edges, n=None):
    """Build a DirectedLaplacian from (u, v, w) triples.

    Parallel edges merge by weight summation; self-loops are dropped and
    counted.  Weights must be >= 0 (zero-weight entries are ignored).

    Raises:
        NegativeWeightError: some w < 0.
        IndexOutOfRangeError: an endpoint is negative or >= n (when n given).
    """
    triples = [(int(u), int(v), float(w)) for u, v, w in edges]
    if n is None:
        n = 1 + max((max(u, v) for u, v, _ in triples), default=-1)
        n = max(n, 0)
    n = int(n)
    out_adj = [dict() for _ in range(n)]
    in_adj = [dict() for _ in range(n)]
    diag = np.zeros(n)
    diag_in = np.zeros(n)
    dropped = 0
    for u, v, w in triples:
        if u < 0 or v < 0 or u >= n or v >= n:
            raise IndexOutOfRangeError(f"edge ({u}, {v}) outside [0, {n})")
        if w < 0:
            raise NegativeWeightError(f"edge ({u}, {v}) has weight {w} < 0")
        if w == 0:
            continue
        if u == v:
            dropped += 1
            continue
        out_adj[u][v] = out_adj[u].get(v, 0.0) + w
        in_adj[v][u] = in_adj[v].get(u, 0.0) + w
        diag[u] += w
        diag_in[v] += w
    return DirectedLaplacian(n, out_adj, in_adj, diag, diag_in, dropped)


def validate(L, check_connectivity=True, tol=STRUCTURAL_TOL):
    """Report column/row sum defects, sign violations and strong connectivity.

    Report-style: never raises on a bad matrix.  `check_connectivity=False`
    skips the SCC decomposition (the only non-linear-time part).
    """
    n = L.n
    scale = float(np.max(L.diag)) if n and np.max(L.diag) > 0 else 1.0
    # column j sums to diag[j] - total out-weight of j; rebuilt from adjacency
    col_out = np.zeros(n)
    row_in = np.zeros(n)
    signs = 0
    for u in range(n):
        for v, w in L.out_adj[u].items():
            col_out[u] += w
            row_in[v] += w
            if w < 0:
                signs += 1
    signs += int(np.count_nonzero(L.diag < 0))
    column_defect = float(np.max(np.abs(L.diag - col_out))) / scale if n else 0.0
    row_defect = float(np.max(np.abs(L.diag - row_in))) / scale if n else 0.0
    eulerian = bool(row_defect <= tol and column_defect <= tol)

    strongly_connected = None
    scc_count = None
    if check_connectivity and n > 0:
        scc_count = int(connected_components(
            L.to_csr() != 0, directed=True, connection="strong",
            return_labels=False))
        strongly_connected = scc_count == 1
    return ValidationReport(
        n=n, column_defect=column_defect, row_defect=row_defect,
        sign_violations=signs, eulerian=eulerian,
        strongly_connected=strongly_connected, scc_count=scc_count, tol=tol)


def is_eulerian(L, tol=STRUCTURAL_TOL):
    """True iff weighted in-degree equals out-degree at every vertex."""
    if L.n == 0:
        return True
    scale = max(float(np.max(L.diag)), 1e-300)
    return bool(np.max(np.abs(L.diag - L.diag_in)) <= tol * scale)


def undirectification(L):
    """Symmetric part (L + L^T) / 2 as a dense array.

    Accepts a DirectedLaplacian or a square numpy array.  For an Eulerian
    Laplacian the result is an undirected Laplacian (symmetric PSD with zero
    row sums).
    """
    if isinstance(L, DirectedLaplacian):
        m = L.to_dense()
    else:
        m = np.asarray(L, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("undirectification needs a square matrix")
    return (m + m.T) / 2.0


def symmetric_coo(L):
    """COO triplets (i, j, v) of (L + L^T)/2, duplicates summing.

    Compact form used for per-phase snapshots at scales where densifying
    the symmetric part is wasteful.
    """
    rows, cols, vals = [], [], []
    for u, v, w in L.edges():
        rows.append(v)
        cols.append(u)
        vals.append(-w / 2.0)
        rows.append(u)
        cols.append(v)
        vals.append(-w / 2.0)
    for i in range(L.n):
        d = (L.diag[i] + L.diag_in[i]) / 2.0
        if d != 0.0:
            rows.append(i)
            cols.append(i)
            vals.append(d)
    return (np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(vals, dtype=np.float64))
