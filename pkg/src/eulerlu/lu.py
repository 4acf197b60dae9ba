"""Sparse approximate LU factorization of Eulerian Laplacians.

The driver eliminates vertices in phases.  Each phase picks a 0.1-RCDD block
from the current matrix, eliminates half of it one vertex at a time (low
degree vertices first, chosen at random), and replaces every elimination
clique by the average of independent degree-preserving samples.  The whole
matrix is resparsified whenever its nonzero count doubles past the budget.
Once few enough vertices remain, the driver finishes with exact elimination,
which contributes no further error.

Factors are stored unscaled: pivot d_k, the full column c_k of the current
matrix at the pivot vertex, and its row divided by d_k, so that the product
L~ = sum_k c_k r_k reconstructs the input exactly in exact mode.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from .elimination import EliminationStar, single_vertex_elim
from .errors import (
    DimensionMismatchError,
    EmptyPoolError,
    InvariantViolationError,
    NonConvergentPhasesError,
    NotEulerianError,
    ZeroInteriorPivotError,
)
from .laplacian import DirectedLaplacian, symmetric_coo, validate
from .rcdd import find_rcdd_block
from .sparsify import SparsifierConfig, sparsify_eulerian
from . import oracle


def theoretical_sample_count(eps, failure_prob):
    """Per-elimination sample count the analysis asks for: ceil(ln^2(1/d)/e^2).

    At desk-scale parameters this is in the thousands, far beyond what a
    pure-Python build can afford; SolverConfig.samples_per_elim defaults to
    a measured desk-scale value instead.
    """
    return math.ceil(math.log(1.0 / failure_prob) ** 2 / eps ** 2)


@dataclass
class SolverConfig:
    """Build and solve parameters.

    eps: factorization quality target in (0, 1/2).
    failure_prob: failure budget delta in (0, 1).
    alpha: RCDD dominance margin for elimination blocks.
    samples_per_elim: clique samples averaged per elimination (sampled mode).
    budget_per_vertex: nonzero budget per remaining vertex; None resolves to
        8 * ceil(eps^-2 * ln(1/failure_prob)).
    dense_cutoff: switch to exact elimination at this many remaining vertices.
    mode: "sampled" | "exact" (exact cliques everywhere; a test oracle mode).
    sparsifier: "exact" (passthrough) | "sampler".
    eta / max_iters / tol: Richardson parameters for solves.
    keep_snapshots: store per-phase symmetrized snapshots (None: n <= 2048).
    record_states: keep a dense copy of the matrix after every elimination.
    max_phases: phase guard; None resolves to 32 * ceil(log2 n).
    validate_steps: check Eulerian closure after every elimination.
    kappa_estimate: residual tolerance divider above the dense-oracle guard.
    """
    eps: float = 0.25
    failure_prob: float = 1e-4
    alpha: float = 0.1
    samples_per_elim: int = 32
    budget_per_vertex: float | None = None
    dense_cutoff: int = 16
    mode: str = "sampled"
    sparsifier: str = "exact"
    eta: float = 1.0
    max_iters: int = 200
    tol: float = 1e-8
    keep_snapshots: bool | None = None
    record_states: bool = False
    max_phases: int | None = None
    rcdd_max_attempts: int | None = None
    validate_steps: bool = True
    kappa_estimate: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")
        if not 0.0 < self.failure_prob < 1.0:
            raise ValueError("failure_prob must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.mode not in ("sampled", "exact"):
            raise ValueError("mode must be 'sampled' or 'exact'")
        if self.sparsifier not in ("exact", "sampler"):
            raise ValueError("sparsifier must be 'exact' or 'sampler'")

    def resolved_budget_per_vertex(self):
        if self.budget_per_vertex is not None:
            return float(self.budget_per_vertex)
        return 8.0 * math.ceil(self.eps ** -2 * math.log(1.0 / self.failure_prob))


def as_rng(rng):
    """Accept a Generator, an int seed, or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else int(rng))


# ---------------------------------------------------------------------------
# mutable elimination state
# ---------------------------------------------------------------------------

class _WorkGraph:
    """Mutable adjacency view of the current approximate Schur complement."""

    __slots__ = ("n", "out_adj", "in_adj", "diag_out", "diag_in",
                 "alive", "alive_count", "edge_count")

    def __init__(self, L):
        self.n = L.n
        self.out_adj = [dict(d) for d in L.out_adj]
        self.in_adj = [dict(d) for d in L.in_adj]
        self.diag_out = L.diag.astype(np.float64).copy()
        self.diag_in = L.diag_in.astype(np.float64).copy()
        self.alive = np.ones(L.n, dtype=bool)
        self.alive_count = L.n
        self.edge_count = L.edge_count

    def alive_vertices(self):
        return np.nonzero(self.alive)[0]

    def add_edge(self, u, v, w):
        out_u = self.out_adj[u]
        if v in out_u:
            nw = out_u[v] + w
            out_u[v] = nw
            self.in_adj[v][u] = nw
        else:
            out_u[v] = w
            self.in_adj[v][u] = w
            self.edge_count += 1
        self.diag_out[u] += w
        self.diag_in[v] += w

    def remove_vertex(self, v):
        """Strip v's star; returns (in_weights, out_weights) dicts."""
        out_w = self.out_adj[v]
        in_w = self.in_adj[v]
        for u, w in out_w.items():
            del self.in_adj[u][v]
            self.diag_in[u] -= w
        for u, w in in_w.items():
            del self.out_adj[u][v]
            self.diag_out[u] -= w
        self.edge_count -= len(out_w) + len(in_w)
        self.out_adj[v] = {}
        self.in_adj[v] = {}
        self.diag_out[v] = 0.0
        self.diag_in[v] = 0.0
        self.alive[v] = False
        self.alive_count -= 1
        return in_w, out_w

    def degree(self, v):
        return len(self.in_adj[v]) + len(self.out_adj[v])

    def eulerian_defect(self, scale_floor=0.0):
        """max |out - in| over alive vertices, relative to the max diagonal.

        `scale_floor` guards the normalization when the remaining matrix has
        shrunk to numerical dust (the final near-zero pivot).
        """
        if self.alive_count == 0:
            return 0.0
        gap = np.abs(self.diag_out - self.diag_in)[self.alive]
        scale = max(float(self.diag_out[self.alive].max()), scale_floor, 1e-300)
        return float(gap.max()) / scale

    def column(self, v):
        """Sparse column of the current matrix at v, diagonal entry first."""
        idx = [v] + list(self.out_adj[v].keys())
        val = [self.diag_out[v]] + [-w for w in self.out_adj[v].values()]
        return np.asarray(idx, dtype=np.int64), np.asarray(val)

    def row(self, v, scale=1.0):
        idx = [v] + list(self.in_adj[v].keys())
        val = [self.diag_out[v] * scale] + [-w * scale for w in self.in_adj[v].values()]
        return np.asarray(idx, dtype=np.int64), np.asarray(val)

    def to_laplacian(self):
        return DirectedLaplacian(
            self.n, [dict(d) for d in self.out_adj],
            [dict(d) for d in self.in_adj],
            self.diag_out.copy(), self.diag_in.copy())


# ---------------------------------------------------------------------------
# elimination steps
# ---------------------------------------------------------------------------

def select_low_degree_vertex(pool, graph, rng, max_rejections=64):
    """Pop a uniform vertex of at-most-twice-average degree from `pool`.

    Rejection-samples against the average (in+out) degree over remaining
    vertices; after `max_rejections` misses falls back to a linear scan
    (uniform over the eligible subset, minimum degree if none qualify).
    """
    if not pool:
        raise EmptyPoolError("elimination pool is empty")
    threshold = 4.0 * graph.edge_count / max(graph.alive_count, 1)
    for _ in range(max_rejections):
        pos = int(rng.integers(len(pool)))
        if graph.degree(pool[pos]) <= threshold:
            return pool.pop(pos)
    eligible = [i for i, v in enumerate(pool) if graph.degree(v) <= threshold]
    if eligible:
        pos = eligible[int(rng.integers(len(eligible)))]
    else:
        pos = min(range(len(pool)), key=lambda i: graph.degree(pool[i]))
    return pool.pop(pos)


class _Recorder:
    """Accumulates factor records and build statistics."""

    def __init__(self, n):
        self.n = n
        self.order = []
        self.pivots = []
        self.columns = []
        self.rows = []
        self.snapshots = []
        self.states = []
        self.pool_sizes = []
        self.resparsify_count = 0
        self.max_defect = 0.0
        self.max_pivot = 0.0

    def record(self, v, d, col, row):
        self.order.append(int(v))
        self.pivots.append(float(d))
        self.columns.append(col)
        self.rows.append(row)
        self.max_pivot = max(self.max_pivot, abs(d))


def _eliminate(work, v, cfg, rng, rec):
    """Pivot out v, replacing its clique exactly or by averaged samples."""
    d = float(work.diag_out[v])
    if d <= 1e-14 * max(rec.max_pivot, 1e-300):
        raise ZeroInteriorPivotError(
            f"pivot {d:.3e} at vertex {v} with {work.alive_count} remaining")
    col = work.column(v)
    row = work.row(v, scale=1.0 / d)
    in_w, out_w = work.remove_vertex(v)

    if cfg.mode == "exact":
        inv_d = 1.0 / d
        for u, wl in in_w.items():
            for t, wr in out_w.items():
                if u != t:
                    work.add_edge(u, t, wl * wr * inv_d)
    else:
        star = EliminationStar.from_dicts(in_w, out_w, pivot=d, tol=1e-9)
        acc = {}
        verts = [int(x) for x in star.vertices]
        for _ in range(cfg.samples_per_elim):
            sample = single_vertex_elim(star, rng)
            for s, t, w in zip(sample.src, sample.dst, sample.weights):
                key = (verts[s], verts[t])
                acc[key] = acc.get(key, 0.0) + w
        inv_p = 1.0 / cfg.samples_per_elim
        for (u, t), w in acc.items():
            if u != t:
                work.add_edge(u, t, w * inv_p)

    rec.record(v, d, col, row)
    if cfg.validate_steps:
        defect = work.eulerian_defect(scale_floor=rec.max_pivot)
        rec.max_defect = max(rec.max_defect, defect)
        if defect > 1e-9:
            raise InvariantViolationError(
                f"Eulerian closure broken after eliminating {v}: {defect:.3e}")
    if cfg.record_states:
        rec.states.append((list(rec.order), work.to_laplacian()))


def _sparsify_work(work, cfg, target, eps_inner, delta_inner, rng, rec):
    scfg = SparsifierConfig(mode=cfg.sparsifier, eps=min(max(eps_inner, 1e-9), 0.999),
                            failure_prob=min(max(delta_inner, 1e-12), 0.999),
                            nnz_target=int(target))
    slim = sparsify_eulerian(work.to_laplacian(), scfg, rng)
    rec.resparsify_count += 1
    fresh = _WorkGraph(slim)
    # eliminated vertices are zero rows of the sparsified matrix; keep them dead
    fresh.alive = work.alive.copy()
    fresh.alive_count = work.alive_count
    return fresh


def _run_phase(work, eps_phase, delta_phase, cfg, rng, rec):
    """One block-elimination phase; returns the (possibly new) work graph."""
    alive = work.alive_count
    budget = max(cfg.resolved_budget_per_vertex() * alive, 4.0 * alive)
    samples = max(cfg.samples_per_elim, 1)
    eps_inner = eps_phase / samples
    delta_inner = delta_phase / samples
    # initial sparsify: passthrough mode only acts as a budget check, so it
    # takes the current size as a floor (the budget formula's second slot)
    nnz_now = work.edge_count + alive
    target0 = max(budget, nnz_now) if cfg.sparsifier == "exact" else budget
    if nnz_now > target0:
        work = _sparsify_work(work, cfg, target0, eps_inner, delta_inner, rng, rec)

    pool_arr = find_rcdd_block(
        work, cfg.alpha, rng, failure_prob=delta_phase,
        vertices=work.alive_vertices().tolist())
    pool = [int(v) for v in pool_arr]
    rec.pool_sizes.append(len(pool))
    k_max = max(1, len(pool) // 2)

    for _ in range(k_max):
        v = select_low_degree_vertex(pool, work, rng)
        _eliminate(work, v, cfg, rng, rec)
        if work.edge_count + work.alive_count >= 2 * budget:
            work = _sparsify_work(work, cfg, budget, eps_inner, delta_inner,
                                  rng, rec)
    return work, k_max


def _snapshot(work, rec, keep):
    if keep:
        rec.snapshots.append(symmetric_coo(work.to_laplacian()))


# ---------------------------------------------------------------------------
# public build entry points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseResult:
    """Output of a single phase on a standalone Laplacian."""
    s_out: DirectedLaplacian
    order: tuple
    pivots: tuple
    columns: tuple
    rows: tuple
    k_max: int
    pool_size: int


def single_phase(L, failure_prob, eps, cfg=None, rng=None):
    """Run one elimination phase on L and return the partial factorization.

    The returned columns/rows are the factor pieces for the eliminated
    vertices (in elimination order); s_out is the Eulerian matrix on the
    survivors.
    """
    cfg = cfg or SolverConfig()
    rng = as_rng(rng)
    report = validate(L)
    if not report.eulerian:
        raise NotEulerianError("single_phase needs an Eulerian input")
    if not report.strongly_connected:
        raise NotEulerianError("single_phase needs a strongly connected input")
    work = _WorkGraph(L)
    rec = _Recorder(L.n)
    work, k_max = _run_phase(work, eps, failure_prob, cfg, rng, rec)
    return PhaseResult(
        s_out=work.to_laplacian(), order=tuple(rec.order),
        pivots=tuple(rec.pivots), columns=tuple(rec.columns),
        rows=tuple(rec.rows), k_max=k_max, pool_size=rec.pool_sizes[0])


@dataclass(frozen=True)
class FactorStats:
    n: int
    phases: int
    eliminations: int
    resparsify_count: int
    nnz_lower: int
    nnz_upper: int
    max_eulerian_defect: float
    final_pivot: float
    pool_sizes: tuple
    build_seconds: float


class LUFactorization:
    """Permutation + per-step (pivot, column, row) records.

    The product sum_k c_k r_k approximates the input Laplacian; rows carry
    a unit diagonal (scaled by 1/pivot), columns are unscaled.
    """

    def __init__(self, n, perm, pivots, columns, rows, stats,
                 config=None, seed=None, snapshots=None, states=None):
        self.n = int(n)
        self.perm = np.asarray(perm, dtype=np.int64)
        self.pivots = np.asarray(pivots, dtype=np.float64)
        self.columns = list(columns)
        self.rows = list(rows)
        self.stats = stats
        self.config = config
        self.seed = seed
        self.snapshots = snapshots
        self.states = states

    @property
    def nnz_lower(self):
        return sum(int(np.count_nonzero(v)) for _, v in self.columns)

    @property
    def nnz_upper(self):
        return sum(int(np.count_nonzero(v)) for _, v in self.rows)

    def apply_product(self, x):
        """y = (lower @ upper) x via the rank-one sum."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatchError(f"vector shape {x.shape} != ({self.n},)")
        y = np.zeros(self.n)
        for (cidx, cval), (ridx, rval) in zip(self.columns, self.rows):
            t = float(rval @ x[ridx]) if len(ridx) else 0.0
            if t != 0.0 and len(cidx):
                y[cidx] += t * cval
        return y

    def apply_inverse(self, b, quiet=False):
        """Pseudoinverse action of the product on span(1)-orthogonal vectors.

        Forward-substitutes the lower factor, back-substitutes the upper,
        treats the final zero pivot as a free coordinate, and projects the
        result orthogonal to the all-ones vector.  A right-hand side with a
        component along ones is projected away (with a warning).
        """
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.n,):
            raise DimensionMismatchError(f"vector shape {b.shape} != ({self.n},)")
        mean = float(b.mean())
        if abs(mean) * self.n > 1e-10 * (1.0 + float(np.abs(b).max())) and not quiet:
            warnings.warn("right-hand side projected orthogonal to ones",
                          stacklevel=2)
        y = b - mean
        scale = float(np.abs(self.pivots).max()) if self.n else 0.0
        z = np.zeros(self.n)
        for k in range(self.n):
            d = self.pivots[k]
            if abs(d) <= 1e-14 * scale:
                if k != self.n - 1:
                    raise ZeroInteriorPivotError(
                        f"pivot {d:.3e} at elimination step {k}")
                z[k] = 0.0
                continue
            v = self.perm[k]
            z[k] = y[v] / d
            cidx, cval = self.columns[k]
            y[cidx] -= z[k] * cval
        x = np.zeros(self.n)
        for k in range(self.n - 1, -1, -1):
            d = self.pivots[k]
            v = self.perm[k]
            if abs(d) <= 1e-14 * scale:
                x[v] = 0.0
                continue
            ridx, rval = self.rows[k]
            # x[v] is still zero here, so the unit diagonal term drops out
            x[v] = z[k] - float(rval @ x[ridx])
        return x - x.mean()

    # dense views -----------------------------------------------------------

    def lower_dense(self):
        m = np.zeros((self.n, self.n))
        for k, (cidx, cval) in enumerate(self.columns):
            m[cidx, self.perm[k]] = cval
        return m

    def upper_dense(self):
        m = np.zeros((self.n, self.n))
        for k, (ridx, rval) in enumerate(self.rows):
            m[self.perm[k], ridx] = rval
        return m

    def product_dense(self):
        return self.lower_dense() @ self.upper_dense()

    def certificate_snapshots(self):
        """[(theta, dense symmetric snapshot)] for the dense oracle."""
        if not self.snapshots:
            raise InvariantViolationError("factorization kept no snapshots")
        theta = 1.0 / len(self.snapshots)
        out = []
        for rows, cols, vals in self.snapshots:
            m = np.zeros((self.n, self.n))
            np.add.at(m, (rows, cols), vals)
            out.append((theta, m))
        return out

    def certificate_matrix(self):
        return oracle.build_certificate_matrix(self.certificate_snapshots())

    # serialization ----------------------------------------------------------

    def to_json_dict(self):
        def pairs(idx, val):
            return [[int(i), float(v)] for i, v in zip(idx, val)]
        return {
            "n": self.n,
            "permutation": [int(v) for v in self.perm],
            "pivots": [float(d) for d in self.pivots],
            "columns": [pairs(i, v) for i, v in self.columns],
            "rows": [pairs(i, v) for i, v in self.rows],
            "config": self.config,
            "seed": self.seed,
            "stats": asdict(self.stats) if self.stats else None,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)

    @classmethod
    def from_json_dict(cls, data):
        def unpack(entries):
            if not entries:
                return (np.empty(0, dtype=np.int64), np.empty(0))
            idx, val = zip(*entries)
            return (np.asarray(idx, dtype=np.int64), np.asarray(val))
        stats = data.get("stats")
        return cls(
            n=data["n"], perm=data["permutation"], pivots=data["pivots"],
            columns=[unpack(c) for c in data["columns"]],
            rows=[unpack(r) for r in data["rows"]],
            stats=FactorStats(**{**stats, "pool_sizes": tuple(stats["pool_sizes"])})
            if stats else None,
            config=data.get("config"), seed=data.get("seed"))

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def eulerian_lu(L, cfg=None, rng=None, seed=None):
    """Build a sparse approximate LU factorization of an Eulerian Laplacian.

    Runs block-elimination phases until at most cfg.dense_cutoff vertices
    remain, then finishes exactly.  Records one symmetrized snapshot per
    phase (when kept) for certificate diagnostics.
    """
    cfg = cfg or SolverConfig()
    if seed is not None and rng is None:
        rng = seed
    stored_seed = rng if isinstance(rng, int) else seed
    rng = as_rng(rng)
    t0 = time.perf_counter()

    report = validate(L)
    if L.n < 2:
        raise NotEulerianError("need at least 2 vertices")
    if not report.eulerian:
        raise NotEulerianError(
            f"input is not Eulerian (row defect {report.row_defect:.3e})")
    if not report.strongly_connected:
        raise NotEulerianError(
            f"input is not strongly connected ({report.scc_count} components)")

    keep_snapshots = cfg.keep_snapshots
    if keep_snapshots is None:
        keep_snapshots = L.n <= oracle.DENSE_GUARD
    max_phases = cfg.max_phases or 32 * max(1, math.ceil(math.log2(L.n)))
    log_n = max(1, math.ceil(math.log2(L.n)))
    eps_phase = cfg.eps / log_n
    delta_phase = cfg.failure_prob / L.n

    work = _WorkGraph(L)
    rec = _Recorder(L.n)
    phases = 0
    while work.alive_count > max(cfg.dense_cutoff, 1):
        if phases >= max_phases:
            raise NonConvergentPhasesError(
                f"{phases} phases with {work.alive_count} vertices remaining")
        _snapshot(work, rec, keep_snapshots)
        work, _ = _run_phase(work, eps_phase, delta_phase, cfg, rng, rec)
        phases += 1

    # exact dense finish (no additional error)
    _snapshot(work, rec, keep_snapshots)
    finish_cfg = _exact_finish_config(cfg)
    remaining = [int(v) for v in work.alive_vertices()]
    for v in remaining[:-1]:
        _eliminate(work, v, finish_cfg, rng, rec)
    last = remaining[-1]
    d_last = float(work.diag_out[last])
    if abs(d_last) > 1e-9 * max(rec.max_pivot, 1.0):
        raise InvariantViolationError(
            f"final pivot {d_last:.3e} is not numerically zero")
    empty = np.empty(0, dtype=np.int64)
    rec.record(last, 0.0, (empty, np.empty(0)), (empty.copy(), np.empty(0)))
    phases += 1

    stats = FactorStats(
        n=L.n, phases=phases, eliminations=L.n,
        resparsify_count=rec.resparsify_count,
        nnz_lower=sum(len(c[0]) for c in rec.columns),
        nnz_upper=sum(len(r[0]) for r in rec.rows),
        max_eulerian_defect=rec.max_defect,
        final_pivot=d_last,
        pool_sizes=tuple(rec.pool_sizes),
        build_seconds=time.perf_counter() - t0)
    return LUFactorization(
        n=L.n, perm=rec.order, pivots=rec.pivots, columns=rec.columns,
        rows=rec.rows, stats=stats, config=_config_dict(cfg), seed=stored_seed,
        snapshots=rec.snapshots if keep_snapshots else None,
        states=rec.states if cfg.record_states else None)


def _exact_finish_config(cfg):
    d = _config_dict(cfg)
    d["mode"] = "exact"
    return SolverConfig(**d)


def _config_dict(cfg):
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
