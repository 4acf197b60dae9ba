"""Preconditioned Richardson iteration against the approximate LU product.

The factorization's triangular solves act as an approximate pseudoinverse of
the original Laplacian; iterating x <- x + eta * Z (b - L x) contracts the
error geometrically in the certificate norm.  At oracle scale convergence is
certified directly in the undirectification seminorm against the dense
pseudoinverse solution; beyond it a relative l2 residual stands in.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergenceError,
    NotConvergedError,
    NotEulerianError,
    TooLargeError,
)
from .laplacian import undirectification, validate
from .lu import SolverConfig, as_rng, eulerian_lu
from . import oracle


@dataclass(frozen=True)
class SolveReport:
    """Convergence record of one preconditioned solve."""
    iterations: int
    converged: bool
    certified: str                 # "dense-oracle" | "l2-residual"
    projected_rhs: bool
    final_rel_error: float
    residual_l2: tuple
    error_history: tuple | None    # undirectification-seminorm errors
    contraction_median: float | None
    eta: float
    wall_seconds: float


def richardson(apply_m, apply_z, b, eta=1.0, max_iters=200, tol=0.0,
               divergence_factor=10.0, monitor=None):
    """Iterate x <- x + eta * Z(b - M x) from x = 0.

    Stops when `monitor(iteration, x, residual)` returns True, or the
    relative l2 residual drops to `tol`, or `max_iters` is reached.  Raises
    DivergenceError when the residual grows `divergence_factor` times over
    its running minimum.

    Returns (x, residual_history, converged).
    """
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b)
    r = b.copy()
    norms = [float(np.linalg.norm(r))]
    if norms[0] == 0.0:
        return x, norms, True
    best = norms[0]
    for it in range(1, max_iters + 1):
        x = x + eta * apply_z(r)
        r = b - apply_m(x)
        rn = float(np.linalg.norm(r))
        norms.append(rn)
        best = min(best, rn)
        if monitor is not None and monitor(it, x, r):
            return x, norms, True
        if tol > 0.0 and rn <= tol * norms[0]:
            return x, norms, True
        if rn > divergence_factor * best and rn > 1e2 * np.finfo(float).eps * norms[0]:
            raise DivergenceError(
                f"residual {rn:.3e} grew {divergence_factor}x over best {best:.3e}")
    return x, norms, False


def solve_eulerian(L, b, eps_solve=1e-8, cfg=None, rng=None, factorization=None):
    """Solve L x = b to relative error eps_solve in the symmetrized seminorm.

    Builds (or reuses) an approximate LU factorization and runs Richardson
    with the triangular solves as preconditioner.  Right-hand sides with a
    component along ones are projected (with a warning).  Raises
    NotConvergedError after cfg.max_iters without reaching the target.
    """
    cfg = cfg or SolverConfig()
    rng = as_rng(rng)
    t0 = time.perf_counter()
    report = validate(L)
    if not (report.eulerian and report.strongly_connected):
        raise NotEulerianError("solve_eulerian needs a strongly connected "
                               "Eulerian Laplacian")
    b = np.asarray(b, dtype=np.float64)
    mean = float(b.mean())
    projected = abs(mean) * L.n > 1e-12 * (1.0 + float(np.abs(b).max()))
    if projected:
        warnings.warn("projected right-hand side orthogonal to ones",
                      stacklevel=2)
    bp = b - mean
    if float(np.linalg.norm(bp)) == 0.0:
        return np.zeros(L.n), SolveReport(
            iterations=0, converged=True, certified="trivial",
            projected_rhs=projected, final_rel_error=0.0,
            residual_l2=(0.0,), error_history=(0.0,),
            contraction_median=None, eta=cfg.eta,
            wall_seconds=time.perf_counter() - t0)

    fact = factorization if factorization is not None else \
        eulerian_lu(L, cfg, rng)
    apply_m = L.matvec
    apply_z = lambda r: fact.apply_inverse(r, quiet=True)

    dense_certified = L.n <= oracle.DENSE_GUARD
    errors = []
    if dense_certified:
        ldense = L.to_dense()
        xstar = oracle.pinv(ldense) @ bp
        ul = undirectification(ldense)
        xstar_norm = float(np.sqrt(max(xstar @ ul @ xstar, 0.0)))
        target = eps_solve * xstar_norm

        def monitor(it, x, r):
            diff = x - xstar
            err = float(np.sqrt(max(diff @ ul @ diff, 0.0)))
            errors.append(err)
            return err <= target

        x, norms, converged = richardson(
            apply_m, apply_z, bp, eta=cfg.eta, max_iters=cfg.max_iters,
            monitor=monitor)
        final_rel = errors[-1] / xstar_norm if errors else 0.0
        certified = "dense-oracle"
    else:
        x, norms, converged = richardson(
            apply_m, apply_z, bp, eta=cfg.eta, max_iters=cfg.max_iters,
            tol=eps_solve / cfg.kappa_estimate)
        final_rel = norms[-1] / norms[0]
        certified = "l2-residual"

    ratios = [e1 / e0 for e0, e1 in zip(errors, errors[1:]) if e0 > 0.0] \
        if errors else [n1 / n0 for n0, n1 in zip(norms, norms[1:]) if n0 > 0.0]
    rep = SolveReport(
        iterations=len(norms) - 1, converged=converged, certified=certified,
        projected_rhs=projected, final_rel_error=final_rel,
        residual_l2=tuple(norms),
        error_history=tuple(errors) if errors else None,
        contraction_median=float(np.median(ratios)) if ratios else None,
        eta=cfg.eta, wall_seconds=time.perf_counter() - t0)
    if not converged:
        raise NotConvergedError(
            f"no convergence to {eps_solve:.3e} in {cfg.max_iters} iterations",
            x=x, report=rep)
    return x, rep


def materialize_inverse(fact):
    """Dense matrix of the preconditioner action (oracle-sized only)."""
    if fact.n > oracle.DENSE_GUARD:
        raise TooLargeError(f"n={fact.n} exceeds dense guard")
    z = np.zeros((fact.n, fact.n))
    for i in range(fact.n):
        e = np.zeros(fact.n)
        e[i] = 1.0
        z[:, i] = fact.apply_inverse(e, quiet=True)
    return z


def approx_pinv_quality(L, fact, norm_matrix):
    """Operator norm of (I_im(L) - Z L) in the given PSD norm.

    Z is the materialized triangular-solve preconditioner; the returned
    value bounds the per-iteration Richardson contraction in that norm.
    """
    ldense = L.to_dense() if not isinstance(L, np.ndarray) else L
    n = ldense.shape[0]
    if n > oracle.DENSE_GUARD:
        raise TooLargeError(f"n={n} exceeds dense guard")
    z = materialize_inverse(fact)
    proj = np.eye(n) - np.ones((n, n)) / n
    q = proj - z @ ldense
    f = np.asarray(norm_matrix, dtype=np.float64)
    w, v = np.linalg.eigh((f + f.T) / 2.0)
    cutoff = n * np.finfo(float).eps * max(float(w.max()), 0.0)
    half = (v * np.where(w > cutoff, np.sqrt(np.where(w > cutoff, w, 1.0)), 0.0)) @ v.T
    inv_half = (v * np.where(w > cutoff,
                             1.0 / np.sqrt(np.where(w > cutoff, w, 1.0)), 0.0)) @ v.T
    return float(np.linalg.norm(half @ q @ inv_half, 2))
