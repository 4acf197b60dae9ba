"""Row-column diagonally dominant vertex sets and their randomized selection.

A subset F is alpha-RCDD when every member's intra-F off-diagonal row and
column absolute sums are at most 1/(1+alpha) of its diagonal.  Such sets are
the safe elimination blocks: pivoting them out blows the symmetrized Schur
complement up by a bounded factor only.  Selection samples a uniform block
and removes the violating members; each attempt succeeds with probability
at least 1/2, so a handful of retries suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AttemptsExhaustedError,
    EmptyPoolError,
    InvariantViolationError,
)

#: attempt cap default when no failure budget is supplied
DEFAULT_MAX_ATTEMPTS = 64


@dataclass(frozen=True)
class RcddParams:
    """Block selection parameters: dominance margin and retry budget."""
    alpha: float = 0.1
    max_attempts: int | None = None

    def attempts(self, failure_prob=None):
        if self.max_attempts is not None:
            return self.max_attempts
        if failure_prob and 0 < failure_prob < 1:
            return max(8, math.ceil(64 * math.log(1.0 / failure_prob)))
        return DEFAULT_MAX_ATTEMPTS


def _intra_sums(graph, i, members):
    """(row, column) intra-set absolute off-diagonal sums at vertex i."""
    row = 0.0
    for j, w in graph.in_adj[i].items():
        if j in members:
            row += w
    col = 0.0
    for j, w in graph.out_adj[i].items():
        if j in members:
            col += w
    return row, col


def is_alpha_rcdd(graph, subset, alpha):
    """True iff every i in subset passes both intra-subset dominance tests."""
    members = set(int(i) for i in subset)
    if not members:
        return False
    bound = 1.0 / (1.0 + alpha)
    for i in members:
        row, col = _intra_sums(graph, i, members)
        d = graph.diag_out[i]
        if row > bound * d or col > bound * d:
            return False
    return True


def find_rcdd_block(graph, alpha, rng, params=None, failure_prob=None,
                    vertices=None):
    """Randomized alpha-RCDD block of size at least pool/(16 (1+alpha)).

    Samples floor(pool / (8 (1+alpha))) vertices uniformly without
    replacement, removes every member violating either dominance inequality
    with respect to the sample (one pass suffices: removals only shrink
    intra-set sums), and retries while the survivor set is too small.

    `vertices` restricts the pool (used on partially eliminated graphs).
    """
    params = params or RcddParams(alpha=alpha)
    pool = np.asarray(sorted(vertices) if vertices is not None
                      else range(graph.n), dtype=np.int64)
    if pool.size == 0:
        raise EmptyPoolError("no vertices to select from")
    k = max(1, int(pool.size / (8.0 * (1.0 + alpha))))
    need = max(1, math.ceil(pool.size / (16.0 * (1.0 + alpha))))
    bound = 1.0 / (1.0 + alpha)
    attempts = params.attempts(failure_prob)

    for _ in range(attempts):
        sample = rng.choice(pool, size=k, replace=False)
        members = set(int(i) for i in sample)
        survivors = []
        for i in members:
            row, col = _intra_sums(graph, i, members)
            d = graph.diag_out[i]
            if row <= bound * d and col <= bound * d:
                survivors.append(i)
        if len(survivors) >= need:
            block = np.asarray(sorted(survivors), dtype=np.int64)
            if not is_alpha_rcdd(graph, block, alpha):
                raise InvariantViolationError(
                    "survivor filtering produced a non-RCDD block")
            return block
    raise AttemptsExhaustedError(
        f"no alpha-RCDD block of size >= {need} in {attempts} attempts")
