"""Pluggable Eulerian sparsification with a hard degree-preservation contract.

Two modes:

* "exact": passthrough.  Returns the input whenever its nonzero count fits
  the budget and errors otherwise; a correct degenerate sparsifier with zero
  approximation error, the default at desk scale.
* "sampler": a heuristic.  Edges survive independently with probability
  min(1, w / tau) where tau is chosen by waterfilling so the expected kept
  count hits the budget; survivors keep their original weights, and the
  per-vertex weight removed is restored exactly by routing the imbalance
  vectors through the flow-pairing primitive.  The spectral quality of this
  mode is measured (see measure_sparsifier), never assumed.

Either way the output is Eulerian with in/out degrees identical to the
input's up to float accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elimination import pair_marginals
from .errors import (
    BudgetExceededError,
    DimensionMismatchError,
    NotEulerianError,
    TooLargeError,
)
from .laplacian import from_edge_list, is_eulerian
from . import oracle

MODES = ("exact", "sampler")


@dataclass(frozen=True)
class SparsifierConfig:
    """Sparsifier mode and budget.

    eps / failure_prob are quality bookkeeping (the sampler's measured
    target); nnz_target=None resolves to default_nnz_target.
    """
    mode: str = "exact"
    eps: float = 0.1
    failure_prob: float = 1e-4
    nnz_target: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if not 0.0 < self.failure_prob < 1.0:
            raise ValueError("failure_prob must lie in (0, 1)")


def default_nnz_target(n, eps, failure_prob):
    """Budget slot: 8 n ceil(eps^-2 log(1/failure_prob))."""
    return 8 * n * math.ceil(eps ** -2 * math.log(1.0 / failure_prob))


def _waterfill_threshold(weights, target):
    """tau with sum(min(1, w / tau)) ~= target (target < len(weights))."""
    lo = 0.0
    hi = float(weights.max()) * len(weights) / max(target, 1.0)
    for _ in range(64):
        mid = (lo + hi) / 2.0
        if mid <= 0.0:
            break
        kept = float(np.minimum(1.0, weights / mid).sum())
        if kept > target:
            lo = mid
        else:
            hi = mid
    return hi


def sparsify_eulerian(L, cfg, rng=None):
    """Return an Eulerian Laplacian within the nnz budget, degrees preserved.

    Raises NotEulerianError on non-Eulerian input and, in exact mode,
    BudgetExceededError when nnz(L) exceeds the budget.
    """
    if not is_eulerian(L, tol=1e-9):
        raise NotEulerianError("sparsify_eulerian needs an Eulerian input")
    target = cfg.nnz_target if cfg.nnz_target is not None else \
        default_nnz_target(L.n, cfg.eps, cfg.failure_prob)
    if L.nnz <= target:
        return L
    if cfg.mode == "exact":
        raise BudgetExceededError(
            f"passthrough sparsifier: nnz={L.nnz} exceeds budget {target}")

    if rng is None:
        rng = np.random.default_rng(0)
    edges = list(L.edges())
    w = np.array([e[2] for e in edges])
    # budget counts diagonal slots too; keep at least a cycle's worth of
    # edges over the vertices that still carry weight
    active = int(np.count_nonzero(L.diag))
    edge_target = max(target - active, active)
    tau = _waterfill_threshold(w, edge_target)
    keep_prob = np.minimum(1.0, w / tau)
    keep = rng.random(len(edges)) < keep_prob

    kept_edges = [edges[i] for i in np.nonzero(keep)[0]]
    out_def = {}
    in_def = {}
    for i in np.nonzero(~keep)[0]:
        u, v, wt = edges[i]
        out_def[u] = out_def.get(u, 0.0) + wt
        in_def[v] = in_def.get(v, 0.0) + wt
    repair = pair_marginals(out_def, in_def, rng) if out_def else []
    out = from_edge_list(kept_edges + list(repair), n=L.n)
    if not is_eulerian(out, tol=1e-9):
        raise NotEulerianError("sampler produced a non-Eulerian output")
    return out


def measure_sparsifier(L, L_tilde):
    """Asymmetric approximation error of L_tilde against L (dense oracle)."""
    if L.n > oracle.DENSE_GUARD:
        raise TooLargeError(f"n={L.n} exceeds dense guard {oracle.DENSE_GUARD}")
    if L.n != L_tilde.n:
        raise DimensionMismatchError(f"{L.n} vs {L_tilde.n}")
    return oracle.asym_approx_error(L.to_dense(), L_tilde.to_dense())


def degree_match_defect(L, L_tilde):
    """Max relative in/out degree discrepancy between the two graphs."""
    scale = max(float(np.max(L.diag)), 1e-300)
    d_out = float(np.max(np.abs(L.diag - L_tilde.diag)))
    d_in = float(np.max(np.abs(L.diag_in - L_tilde.diag_in)))
    return max(d_out, d_in) / scale
