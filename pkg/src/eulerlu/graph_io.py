"""Graph file formats: whitespace edge lists and Matrix Market coordinate files.

Edge-list format: one edge per line, "u v w", 0-indexed, whitespace separated,
'#' starts a comment.  Matrix Market files carry the Laplacian matrix itself
(general real coordinate, 1-indexed).
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import NotLaplacianError
from .laplacian import from_edge_list


def read_edge_list(path):
    """Parse a "u v w" edge-list file into a DirectedLaplacian."""
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise NotLaplacianError(
                    f"{path}:{lineno}: expected 'u v w', got {raw.rstrip()!r}")
            u, v, w = parts
            edges.append((int(u), int(v), float(w)))
    return from_edge_list(edges)


def write_edge_list(L, path):
    """Write edges as "u v w" lines with round-trippable float formatting."""
    lines = [f"{u} {v} {w!r}\n" for u, v, w in L.edges()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines)


def read_matrix_market(path):
    """Import a directed Laplacian stored as a Matrix Market matrix.

    Off-diagonal entries must be <= 0 and the diagonal must match the
    column off-diagonal sums to within structural tolerance.
    """
    m = scipy.io.mmread(path)
    m = sp.coo_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotLaplacianError(f"{path}: matrix is not square: {m.shape}")
    n = m.shape[0]
    edges = []
    file_diag = np.zeros(n)
    for i, j, v in zip(m.row, m.col, m.data):
        if i == j:
            file_diag[i] += v
            continue
        if v > 0:
            raise NotLaplacianError(
                f"{path}: positive off-diagonal entry ({i}, {j}) = {v}")
        # L[i, j] = -w(j -> i)
        edges.append((int(j), int(i), -float(v)))
    L = from_edge_list(edges, n=n)
    scale = max(float(np.max(file_diag)), 1e-300)
    if np.max(np.abs(file_diag - L.diag)) > 1e-9 * scale:
        raise NotLaplacianError(
            f"{path}: diagonal does not match column sums "
            f"(max defect {np.max(np.abs(file_diag - L.diag)):.3e})")
    return L


def write_matrix_market(L, path):
    """Export L as a general real Matrix Market coordinate file."""
    scipy.io.mmwrite(path, L.to_csr(), field="real", symmetry="general")


def load_graph(path):
    """Dispatch on extension: .mtx -> Matrix Market, anything else edge list."""
    if str(path).endswith(".mtx"):
        return read_matrix_market(path)
    return read_edge_list(path)


def save_graph(L, path):
    if str(path).endswith(".mtx"):
        write_matrix_market(L, path)
    else:
        write_edge_list(L, path)


def read_vector(path):
    """One float per line, '#' comments allowed."""
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                vals.append(float(line))
    return np.asarray(vals, dtype=np.float64)


def write_vector(x, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{float(v)!r}\n" for v in x)


__all__ = [
    "read_edge_list", "write_edge_list", "read_matrix_market",
    "write_matrix_market", "load_graph", "save_graph",
    "read_vector", "write_vector",
]
