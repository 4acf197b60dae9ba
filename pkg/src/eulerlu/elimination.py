"""Unbiased degree-preserving sparsification of the elimination biclique.

Eliminating a vertex v replaces its star by a dense bipartite clique from
in-neighbors to out-neighbors (edge u -> u' of weight l(u) r(u') / d).  The
sampler here replaces that clique by at most nnz(l) + nnz(r) edges whose row
sums equal l and column sums equal r exactly, and whose expectation is the
clique itself.  Repeatedly: take the globally smallest remaining entry across
both sides, pair it with a weighted-random partner on the other side, emit
the pair, and subtract the mass from both sides.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyDistributionError,
    InvariantViolationError,
)

MASS_TOL = 1e-12


class WeightedIndexSampler:
    """Fenwick-tree sampler over nonnegative weights.

    Supports O(log n) draws proportional to current weights and O(log n)
    weight decreases, which is what the elimination loop needs.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0):
            raise InvariantViolationError("sampler weights must be nonnegative")
        self.n = len(w)
        self.values = w.copy()
        self.tree = [0.0] * (self.n + 1)
        self.total = 0.0
        for i, x in enumerate(w):
            self._add(i, float(x))
        self.size = 1
        while self.size * 2 <= self.n:
            self.size *= 2

    def _add(self, i, delta):
        self.total += delta
        i += 1
        while i <= self.n:
            self.tree[i] += delta
            i += i & (-i)

    def set_weight(self, i, new):
        if new < 0:
            new = 0.0
        self._add(i, new - self.values[i])
        self.values[i] = new

    def draw(self, rng):
        """Index k with probability values[k] / total."""
        total = self.total
        if total <= 0.0:
            raise EmptyDistributionError("sampler has zero total mass")
        u = rng.random() * total
        pos = 0
        step = self.size
        while step:
            nxt = pos + step
            if nxt <= self.n and self.tree[nxt] < u:
                u -= self.tree[nxt]
                pos = nxt
            step //= 2
        idx = min(pos, self.n - 1)
        if self.values[idx] <= 0.0:
            # float boundary: fall back to the nearest positive weight
            alive = np.nonzero(self.values > 0.0)[0]
            if alive.size == 0:
                raise EmptyDistributionError("sampler has zero total mass")
            idx = int(alive[np.argmin(np.abs(alive - idx))])
        return idx


@dataclass(frozen=True)
class EliminationStar:
    """In/out weight vectors of a vertex being eliminated.

    vertices[i] carries in-weight in_weights[i] (weight of the edge
    vertices[i] -> pivot) and out-weight out_weights[i] (pivot ->
    vertices[i]).  Both sides must sum to the pivot diagonal d.
    """
    vertices: np.ndarray
    in_weights: np.ndarray
    out_weights: np.ndarray
    pivot: float

    @classmethod
    def from_dicts(cls, in_w, out_w, pivot=None, tol=MASS_TOL):
        verts = sorted(set(in_w) | set(out_w))
        li = np.array([in_w.get(u, 0.0) for u in verts], dtype=np.float64)
        ro = np.array([out_w.get(u, 0.0) for u in verts], dtype=np.float64)
        if np.any(li < 0) or np.any(ro < 0):
            raise InvariantViolationError("star weights must be nonnegative")
        si, so = float(li.sum()), float(ro.sum())
        d = float(pivot) if pivot is not None else si
        scale = max(d, si, so, 1e-300)
        if abs(si - so) > tol * scale or abs(si - d) > tol * scale:
            raise InvariantViolationError(
                f"star mass mismatch: in={si}, out={so}, pivot={d}")
        return cls(vertices=np.asarray(verts, dtype=np.int64),
                   in_weights=li, out_weights=ro, pivot=d)

    @property
    def size(self):
        return len(self.vertices)

    def nnz(self):
        return int(np.count_nonzero(self.in_weights)
                   + np.count_nonzero(self.out_weights))


@dataclass
class SparseBipartiteSample:
    """Edges (src -> dst, weight > 0) replacing one elimination clique.

    src indexes the in-neighbor side (row sums reproduce the in-weights),
    dst the out-neighbor side (column sums reproduce the out-weights).
    Entries are positions into the star's vertex array.
    """
    src: np.ndarray
    dst: np.ndarray
    weights: np.ndarray
    star: EliminationStar = field(repr=False)

    def __len__(self):
        return len(self.weights)

    def triples(self):
        """(source vertex, target vertex, weight) in graph vertex ids."""
        verts = self.star.vertices
        for s, t, w in zip(self.src, self.dst, self.weights):
            yield int(verts[s]), int(verts[t]), float(w)

    def dense(self):
        k = self.star.size
        a = np.zeros((k, k))
        np.add.at(a, (self.src, self.dst), self.weights)
        return a


def single_vertex_elim(star, rng):
    """Sample a sparse degree-preserving replacement for the clique of `star`.

    Iterative flow pairing: while mass remains, the smallest positive entry
    across both sides (ties: in side first, then lowest position) is paired
    with a random partner drawn proportionally to the other side's remaining
    weights; the emitted weight is subtracted from both.  Floating-point
    residual below MASS_TOL * d is discarded at termination.
    """
    k = star.size
    if k == 0 or star.pivot <= 0.0:
        empty = np.empty(0, dtype=np.int64)
        return SparseBipartiteSample(src=empty, dst=empty.copy(),
                                     weights=np.empty(0), star=star)
    l = star.in_weights.copy()
    r = star.out_weights.copy()
    lheap = [(w, i) for i, w in enumerate(l) if w > 0.0]
    rheap = [(w, i) for i, w in enumerate(r) if w > 0.0]
    heapq.heapify(lheap)
    heapq.heapify(rheap)
    ltree = WeightedIndexSampler(l)
    rtree = WeightedIndexSampler(r)
    tol = MASS_TOL * star.pivot
    max_steps = len(lheap) + len(rheap)
    src, dst, wts = [], [], []

    def _head(heap, vals):
        while heap and vals[heap[0][1]] != heap[0][0]:
            heapq.heappop(heap)
        return heap[0] if heap else None

    for _ in range(max_steps):
        remaining = min(ltree.total, rtree.total)
        if remaining <= tol:
            break
        lh = _head(lheap, l)
        rh = _head(rheap, r)
        if lh is None or rh is None:
            raise InvariantViolationError(
                f"one-sided residual mass {remaining:.3e} in elimination")
        if lh[0] <= rh[0]:
            amount, i = heapq.heappop(lheap)
            j = rtree.draw(rng)
            src.append(i)
            dst.append(j)
            l[i] = 0.0
            ltree.set_weight(i, 0.0)
            new = max(r[j] - amount, 0.0)
            r[j] = new
            rtree.set_weight(j, new)
            if new > 0.0:
                heapq.heappush(rheap, (new, j))
        else:
            amount, i = heapq.heappop(rheap)
            j = ltree.draw(rng)
            src.append(j)
            dst.append(i)
            r[i] = 0.0
            rtree.set_weight(i, 0.0)
            new = max(l[j] - amount, 0.0)
            l[j] = new
            ltree.set_weight(j, new)
            if new > 0.0:
                heapq.heappush(lheap, (new, j))
        wts.append(amount)
    else:
        if min(ltree.total, rtree.total) > tol:
            raise InvariantViolationError(
                "elimination pairing failed to consume the star mass")

    return SparseBipartiteSample(src=np.asarray(src, dtype=np.int64),
                                 dst=np.asarray(dst, dtype=np.int64),
                                 weights=np.asarray(wts), star=star)


def star_local_undirectification(star):
    """(u_local, d_local) of a standalone star, over star.vertices.

    d_local is the diagonal of half the summed in/out weights; u_local is
    that diagonal minus the rank-one term a a^T / sum(a), i.e. the Schur
    complement of the undirected star onto the neighbors.
    """
    from .oracle import star_schur_matrix
    a = (star.in_weights + star.out_weights) / 2.0
    return star_schur_matrix(a), np.diag(a)


def _error_matrix(star, sample, kernel_tol=1e-9):
    """X = l r^T / d - A over star positions, kernel-checked."""
    x = np.outer(star.in_weights, star.out_weights) / star.pivot - sample.dense()
    scale = 1.0 + float(np.abs(x).max()) if x.size else 1.0
    if (np.abs(x.sum(axis=1)).max(initial=0.0) > kernel_tol * scale
            or np.abs(x.sum(axis=0)).max(initial=0.0) > kernel_tol * scale):
        from .errors import KernelMismatchError
        raise KernelMismatchError("elimination error matrix does not kill ones")
    return x


def elimination_error_norm(star, sample, u_local=None):
    """||U_local^{d/2} X U_local^{d/2}||_2 for X = l r^T / d - A.

    u_local defaults to the standalone star value; by the single-elimination
    error bound this is at most 4 for every sample.
    """
    if star.pivot <= 0.0:
        return 0.0
    x = _error_matrix(star, sample)
    if u_local is None:
        u_local, _ = star_local_undirectification(star)
    from .oracle import pinv_sqrt
    half = pinv_sqrt(u_local)
    return float(np.linalg.norm(half @ x @ half, 2))


def elimination_error_norm_diag(star, sample, d_local=None):
    """Same as elimination_error_norm but in the diagonal normalization."""
    if star.pivot <= 0.0:
        return 0.0
    x = _error_matrix(star, sample)
    if d_local is None:
        _, d_local = star_local_undirectification(star)
    d = np.diag(d_local).copy()
    inv_half = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    return float(np.linalg.norm((x * inv_half[:, None]) * inv_half[None, :], 2))


def pair_marginals(out_need, in_need, rng, tol=MASS_TOL):
    """Sparse nonnegative (src, dst, w) triples with exact row/column sums
    and no diagonal entries.

    Pairs the imbalance vectors with the elimination sampler, then rewires
    any self-pairs (u, u) through other triples; rewiring preserves all
    marginals, so it always succeeds when no vertex holds more than the
    total mass: out_need[u] + in_need[u] <= sum(out_need) for every u.
    Imbalances that are per-vertex sums of removed edges (the sparsifier's
    use) satisfy this structurally; otherwise InvariantViolationError is
    raised when a forced self-pair cannot be rewired.
    """
    star = EliminationStar.from_dicts(dict(out_need), dict(in_need), tol=1e-9)
    if star.pivot <= 0.0:
        return []
    sample = single_vertex_elim(star, rng)
    triples = [[s, t, w] for s, t, w in sample.triples()]
    self_idx = [i for i, (s, t, _) in enumerate(triples) if s == t]
    for i in self_idx:
        u = triples[i][0]
        need = triples[i][2]
        for j, (x, y, b) in enumerate(triples):
            if need <= 0.0:
                break
            if j == i or x == u or y == u or b <= 0.0:
                continue
            c = min(need, b)
            triples[j][2] = b - c
            triples.append([u, y, c])
            triples.append([x, u, c])
            need -= c
        if need > tol * star.pivot:
            raise InvariantViolationError(
                "self-pair rewiring ran out of disjoint mass")
        triples[i][2] = 0.0
    return [(s, t, w) for s, t, w in triples if w > 0.0 and s != t]
