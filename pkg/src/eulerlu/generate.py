"""Random Eulerian graph generators.

Every generator produces a strongly connected Eulerian Laplacian; the result
is re-validated after generation.  Graphs are built as sums of directed
cycles (each cycle keeps per-vertex in-weight equal to out-weight), which
makes the Eulerian property structural rather than numerical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError
from .laplacian import from_edge_list, validate
from . import graph_io


@dataclass(frozen=True)
class GraphSpec:
    """Parameters for `generate`.

    kind: "cycle" | "permutation-sum" | "grid-circulation" | "file".
    edge_target: approximate edge count for permutation-sum (rounded to a
        whole number of permutations).
    weight_low/weight_high: uniform range for cycle weights.
    """
    kind: str
    n: int = 0
    edge_target: int | None = None
    weight_low: float = 0.5
    weight_high: float = 2.0
    seed: int = 0
    path: str | None = None


def _cycle_edges(order, weight):
    k = len(order)
    return [(int(order[i]), int(order[(i + 1) % k]), float(weight))
            for i in range(k)]


def _permutation_cycles(perm):
    """Decompose a permutation into its cycles (as vertex lists)."""
    n = len(perm)
    seen = np.zeros(n, dtype=bool)
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cyc = []
        v = start
        while not seen[v]:
            seen[v] = True
            cyc.append(v)
            v = int(perm[v])
        if len(cyc) > 1:
            cycles.append(cyc)
    return cycles


def generate(spec):
    """Build the graph described by `spec`.

    Raises InvalidSpecError for malformed specs or if the generated graph
    fails Eulerian / strong-connectivity validation.
    """
    if spec.kind == "file":
        if not spec.path:
            raise InvalidSpecError("kind='file' requires a path")
        return graph_io.load_graph(spec.path)

    n = int(spec.n)
    if n < 2:
        raise InvalidSpecError(f"need n >= 2, got n={n}")
    if spec.weight_low <= 0 or spec.weight_high < spec.weight_low:
        raise InvalidSpecError("weights must satisfy 0 < low <= high")
    rng = np.random.default_rng(spec.seed)

    if spec.kind == "cycle":
        w = spec.weight_low if spec.weight_low == spec.weight_high else 1.0
        edges = _cycle_edges(np.arange(n), w)

    elif spec.kind == "permutation-sum":
        target = spec.edge_target if spec.edge_target else 3 * n
        rounds = max(1, round(target / n))
        edges = []
        # one Hamiltonian cycle forces strong connectivity
        ham = rng.permutation(n)
        edges += _cycle_edges(ham, rng.uniform(spec.weight_low, spec.weight_high))
        for _ in range(rounds - 1):
            perm = rng.permutation(n)
            for cyc in _permutation_cycles(perm):
                w = rng.uniform(spec.weight_low, spec.weight_high)
                edges += _cycle_edges(np.asarray(cyc), w)

    elif spec.kind == "grid-circulation":
        rows = int(np.sqrt(n))
        while rows > 1 and n % rows:
            rows -= 1
        cols = n // rows
        edges = []
        for i in range(rows):
            order = np.arange(i * cols, (i + 1) * cols)
            edges += _cycle_edges(order, rng.uniform(spec.weight_low, spec.weight_high))
        if rows > 1:
            for j in range(cols):
                order = np.arange(j, n, cols)
                edges += _cycle_edges(order, rng.uniform(spec.weight_low, spec.weight_high))

    else:
        raise InvalidSpecError(f"unknown generator kind {spec.kind!r}")

    L = from_edge_list(edges, n=n)
    report = validate(L)
    if not (report.eulerian and report.strongly_connected):
        raise InvalidSpecError(
            f"generator {spec.kind!r} produced an invalid graph: {report}")
    return L


def random_eulerian(n, edge_target=None, seed=0, weight_low=0.5, weight_high=2.0):
    """Convenience wrapper: permutation-sum graph with ~edge_target edges."""
    return generate(GraphSpec(kind="permutation-sum", n=n,
                              edge_target=edge_target, seed=seed,
                              weight_low=weight_low, weight_high=weight_high))
