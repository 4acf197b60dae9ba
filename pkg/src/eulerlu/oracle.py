"""Dense ground-truth linear algebra: pseudoinverses, Schur complements, the
asymmetric approximation norm, factorization diagnostics, and executable
matrix-fact checks.

Everything here is O(n^3) dense work guarded to n <= DENSE_GUARD; the sparse
modules are tested against these routines at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    IsolatedVertexError,
    KernelMismatchError,
    NonFiniteError,
    NotPsdError,
    SingularPivotBlockError,
    TooLargeError,
)
from .laplacian import DirectedLaplacian, undirectification

DENSE_GUARD = 2048
PSD_TOL = 1e-9
EQ_TOL = 1e-9


def _as_dense(m):
    if isinstance(m, DirectedLaplacian):
        return m.to_dense()
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got shape {a.shape}")
    return a


def _check_finite(m):
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix contains non-finite entries")


def _rank_cutoff(singular_values, shape):
    if singular_values.size == 0:
        return 0.0
    return max(shape) * np.finfo(np.float64).eps * float(singular_values[0])


def pinv(m):
    """Moore-Penrose pseudoinverse with rank cutoff sigma <= n*eps*sigma_max."""
    m = _as_dense(m)
    _check_finite(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    cutoff = _rank_cutoff(s, m.shape)
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (vt.T * inv) @ u.T


def kernel_basis(m):
    """Orthonormal basis of the (right) kernel as columns; may be empty."""
    m = _as_dense(m)
    u, s, vt = np.linalg.svd(m)
    cutoff = _rank_cutoff(s, m.shape)
    mask = np.concatenate([s <= cutoff, np.ones(m.shape[1] - s.size, bool)])
    return vt.T[:, mask]


def rank(m):
    m = _as_dense(m)
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > _rank_cutoff(s, m.shape)))


def _eigh_psd(m, psd_tol=PSD_TOL, what="matrix"):
    """Eigendecomposition of a symmetric matrix, verifying PSD-ness."""
    sym = (m + m.T) / 2.0
    w, v = np.linalg.eigh(sym)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -psd_tol * (1.0 + scale):
        raise NotPsdError(f"{what} has eigenvalue {w[0]:.3e} < 0")
    return w, v, scale


def pinv_sqrt(m, psd_tol=PSD_TOL):
    """M^{dagger/2} for symmetric PSD M (eigenvalue cutoff as in pinv)."""
    m = _as_dense(m)
    _check_finite(m)
    w, v, scale = _eigh_psd(m, psd_tol)
    cutoff = m.shape[0] * np.finfo(np.float64).eps * max(scale, 0.0)
    inv_half = np.where(w > cutoff, 1.0 / np.sqrt(np.where(w > cutoff, w, 1.0)), 0.0)
    return (v * inv_half) @ v.T


def spectral_norm(m):
    return float(np.linalg.norm(_as_dense(m), 2)) if m is not None else 0.0


def schur_complement(m, eliminate):
    """Block-eliminate `eliminate`; returns an n x n matrix zero off C x C.

    Raises SingularPivotBlockError when the pivot block is numerically
    singular.
    """
    m = _as_dense(m)
    _check_finite(m)
    n = m.shape[0]
    f = np.asarray(sorted(set(int(i) for i in eliminate)), dtype=np.int64)
    if f.size == 0:
        return m.copy()
    c = np.asarray([i for i in range(n) if i not in set(f.tolist())], dtype=np.int64)
    mff = m[np.ix_(f, f)]
    s = np.linalg.svd(mff, compute_uv=False)
    if s.size and s[-1] <= _rank_cutoff(s, mff.shape):
        raise SingularPivotBlockError(
            f"pivot block of size {f.size} is singular (sigma_min={s[-1]:.3e})")
    out = np.zeros_like(m)
    if c.size:
        solved = np.linalg.solve(mff, m[np.ix_(f, c)])
        out[np.ix_(c, c)] = m[np.ix_(c, c)] - m[np.ix_(c, f)] @ solved
    return out


def asym_approx_error(a, b, psd_tol=PSD_TOL, kernel_tol=EQ_TOL):
    """The asymmetric approximation norm ||U_a^{d/2} (a - b) U_a^{d/2}||_2.

    Preconditions checked: U_a PSD, and ker(U_a) contained in
    ker(a - b) and ker((a - b)^T).
    """
    a = _as_dense(a)
    b = _as_dense(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.shape} vs {b.shape}")
    _check_finite(a)
    _check_finite(b)
    u = (a + a.T) / 2.0
    w, v, scale = _eigh_psd(u, psd_tol, what="symmetric part")
    n = a.shape[0]
    cutoff = n * np.finfo(np.float64).eps * max(scale, 0.0)
    d = a - b
    kernel = v[:, w <= cutoff]
    if kernel.shape[1]:
        dscale = 1.0 + float(np.abs(d).max())
        if (np.abs(d @ kernel).max() > kernel_tol * dscale
                or np.abs(d.T @ kernel).max() > kernel_tol * dscale):
            raise KernelMismatchError(
                "kernel of the symmetric part is not shared by the difference")
    inv_half = np.where(w > cutoff, 1.0 / np.sqrt(np.where(w > cutoff, w, 1.0)), 0.0)
    half = (v * inv_half) @ v.T
    return float(np.linalg.norm(half @ d @ half, 2))


@dataclass(frozen=True)
class PsdComparisonResult:
    """Outcome of an A <= B (Loewner order) test."""
    min_eigenvalue: float
    tol: float
    passed: bool


def psd_compare(a, b, tol=PSD_TOL):
    """Test A <= B via the smallest eigenvalue of B - A.

    The effective tolerance is tol * (1 + ||B - A||_2) to absorb eigensolver
    noise on near-singular inputs.
    """
    d = _as_dense(b) - _as_dense(a)
    w = np.linalg.eigvalsh((d + d.T) / 2.0)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    eff = tol * (1.0 + scale)
    mn = float(w[0]) if w.size else 0.0
    return PsdComparisonResult(min_eigenvalue=mn, tol=eff, passed=mn >= -eff)


def projected_pinv_restriction(m, keep):
    """Projected coordinate restriction of pinv(m) to the index set `keep`.

    Projects the (keep, keep) block of pinv(m) onto the orthogonal
    complements of the coordinate-restricted right/left kernels of m, which
    are the kernels of the Schur complement onto `keep`.  Deliberately does
    not form the Schur complement, so it can serve as an independent route.
    """
    m = _as_dense(m)
    keep = np.asarray(sorted(set(int(i) for i in keep)), dtype=np.int64)
    mp = pinv(m)
    block = mp[np.ix_(keep, keep)]

    def _proj_against(restricted_kernel):
        if restricted_kernel.shape[1] == 0:
            return np.eye(keep.size)
        q, r = np.linalg.qr(restricted_kernel)
        keep_cols = np.abs(np.diag(r)) > 1e-12 * max(1.0, np.abs(r).max())
        q = q[:, keep_cols]
        return np.eye(keep.size) - q @ q.T

    p_right = _proj_against(kernel_basis(m)[keep, :])
    p_left = _proj_against(kernel_basis(m.T)[keep, :])
    return p_right @ block @ p_left


def star_schur_matrix(a):
    """Schur complement of a star with leg weights a onto the leaves.

    Algebraically diag(a) - a a^T / sum(a); the diagonal is computed as
    a_i * (sum of the other legs) / s to avoid the catastrophic
    cancellation that would otherwise pollute the kernel direction.
    """
    a = np.asarray(a, dtype=np.float64)
    s = float(a.sum())
    if s <= 0.0:
        return np.zeros((a.size, a.size))
    m = -np.outer(a, a) / s
    rest = a.sum() - a
    dominant = a > 0.5 * s
    if np.any(dominant):
        for i in np.nonzero(dominant)[0]:
            rest[i] = float(np.delete(a, i).sum())
    np.fill_diagonal(m, a * rest / s)
    return m


def local_undirectification(L, v):
    """Local symmetric Schur piece used to bound one elimination's error.

    Returns (u_local, d_local, neighbors): the Schur complement of the
    undirected star at v restricted to v's neighbors, and the diagonal
    matrix of half the summed in/out star weights.
    """
    if not isinstance(L, DirectedLaplacian):
        raise TypeError("local_undirectification expects a DirectedLaplacian")
    in_w = L.in_adj[v]
    out_w = L.out_adj[v]
    neighbors = sorted(set(in_w) | set(out_w))
    if not neighbors:
        raise IsolatedVertexError(f"vertex {v} has no incident edges")
    a = np.array([(in_w.get(u, 0.0) + out_w.get(u, 0.0)) / 2.0
                  for u in neighbors])
    u_local = star_schur_matrix(a)
    d_local = np.diag(a)
    return u_local, d_local, neighbors


def build_certificate_matrix(snapshots, psd_tol=PSD_TOL):
    """Convex mix of symmetrized per-phase snapshots: sum of theta_p * U_p.

    Each snapshot is a (theta, matrix) pair; thetas must sum to 1 and each
    matrix must be symmetric PSD of a common dimension.
    """
    snapshots = list(snapshots)
    if not snapshots:
        raise DimensionMismatchError("no snapshots given")
    n = _as_dense(snapshots[0][1]).shape[0]
    total_theta = 0.0
    acc = np.zeros((n, n))
    for theta, u in snapshots:
        u = _as_dense(u)
        if u.shape != (n, n):
            raise DimensionMismatchError(f"snapshot shape {u.shape} != ({n}, {n})")
        if np.abs(u - u.T).max() > EQ_TOL * (1.0 + np.abs(u).max()):
            raise NotPsdError("snapshot is not symmetric")
        _eigh_psd(u, psd_tol, what="snapshot")
        acc += theta * u
        total_theta += theta
    if abs(total_theta - 1.0) > 1e-9:
        raise DimensionMismatchError(f"snapshot weights sum to {total_theta}, not 1")
    return acc


@dataclass(frozen=True)
class FactorizationDiagnostics:
    """Dense quality measurements of an approximate LU product.

    eps: residual of (L - product) in the certificate seminorm.
    gamma: smallest image eigenvalue of the normalized product Gram matrix;
        the solver quality bound is sqrt(eps^2 / gamma).
    ratio_lower/ratio_upper: generalized eigenvalue range of the certificate
        matrix against the undirectification of L.
    """
    n: int
    eps: float
    gamma: float
    ratio_lower: float
    ratio_upper: float


def diagnose_factorization(L, product, certificate, psd_tol=PSD_TOL):
    """Measure ||C^{d/2}(L - P)C^{d/2}||, the product Gram lower bound, and
    the certificate-vs-undirectification eigenvalue ratios."""
    ldense = _as_dense(L)
    n = ldense.shape[0]
    if n > DENSE_GUARD:
        raise TooLargeError(f"n={n} exceeds dense guard {DENSE_GUARD}")
    product = _as_dense(product)
    cert = _as_dense(certificate)
    if product.shape != (n, n) or cert.shape != (n, n):
        raise DimensionMismatchError("shape mismatch in diagnostics")
    w, v, scale = _eigh_psd(cert, psd_tol, what="certificate")
    cutoff = n * np.finfo(np.float64).eps * max(scale, 0.0)
    kdim = int(np.sum(w <= cutoff))
    inv_half = np.where(w > cutoff, 1.0 / np.sqrt(np.where(w > cutoff, w, 1.0)), 0.0)
    half = (v * inv_half) @ v.T
    cert_pinv = (v * np.where(w > cutoff, 1.0 / np.where(w > cutoff, w, 1.0), 0.0)) @ v.T

    eps = float(np.linalg.norm(half @ (ldense - product) @ half, 2))

    gram = half @ product.T @ cert_pinv @ product @ half
    gw = np.linalg.eigvalsh((gram + gram.T) / 2.0)
    gamma = float(gw[kdim]) if kdim < n else 0.0

    ul = undirectification(ldense)
    uhalf = pinv_sqrt(ul, psd_tol)
    ratio_mat = uhalf @ cert @ uhalf
    rw = np.linalg.eigvalsh((ratio_mat + ratio_mat.T) / 2.0)
    ukdim = ul.shape[0] - rank(ul)
    ratio_lower = float(rw[ukdim]) if ukdim < n else 0.0
    ratio_upper = float(rw[-1]) if rw.size else 0.0
    return FactorizationDiagnostics(n=n, eps=eps, gamma=gamma,
                                    ratio_lower=ratio_lower,
                                    ratio_upper=ratio_upper)


# ---------------------------------------------------------------------------
# Executable matrix facts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactCheck:
    name: str
    trials: int
    failures: int
    worst: float    # most negative PSD margin / largest equality defect seen

    @property
    def passed(self):
        return self.failures == 0


@dataclass(frozen=True)
class FactReport:
    checks: tuple

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{status}  {c.name}: {c.trials} trials, "
                         f"{c.failures} failures, worst={c.worst:.3e}")
        return "\n".join(lines)


def random_kernel_matrix(rng, n, kernel_dim=1):
    """Random N with ker(N) = ker(N^T) = ker(U_N) of the given dimension and
    U_N PSD: an orthogonal injection of (PD symmetric + antisymmetric)."""
    r = n - kernel_dim
    if r <= 0:
        raise ValueError("kernel_dim must be < n")
    b = rng.normal(size=(r, r))
    s = b.T @ b / r + np.eye(r)
    c = rng.normal(size=(r, r))
    k = (c - c.T) / 2.0
    q, _ = np.linalg.qr(rng.normal(size=(n, r)))
    return q @ (s + k) @ q.T


def _random_eulerian_dense(rng, n):
    """Dense random Eulerian Laplacian: sum of a few random cycles."""
    m = np.zeros((n, n))
    rounds = 2 + int(rng.integers(0, 3))
    orders = [rng.permutation(n)] + [rng.permutation(n) for _ in range(rounds)]
    for order in orders:
        w = float(rng.uniform(0.5, 2.0))
        for i in range(n):
            u, v = int(order[i]), int(order[(i + 1) % n])
            if u == v:
                continue
            m[v, u] -= w
            m[u, u] += w
    return m


def verify_matrix_facts(trials=100, n_max=12, seed=1, tol=PSD_TOL):
    """Run every matrix-fact check on random instances and report.

    Checks (all at tolerance `tol`):
      - harmonic_dominates_symmetric_part: U_N <= N^T U_N^dagger N.
      - schur_of_psd_dominated: Sc(P, I) <= P for PSD P.
      - star_pinv_dominated_by_inverse_degrees:
        (diag(a) - a a^T / sum(a))^dagger <= diag(a)^{-1}.
      - quadratic_form_degree_bound: L^T D^{-1} L <= 2 U_L for Eulerian L.
      - schur_matches_pinv_restriction: Sc(M, C) equals the pseudoinverse of
        the projected coordinate restriction of pinv(M) to C.
      - schur_composition: eliminating F1 then F2 equals eliminating F1+F2.
      - schur_perturbation_stability: a matrix within asymmetric error e has
        U_Schur within factor ((1+e)/(1-e))^2.
    """
    rng = np.random.default_rng(seed)
    counters = {}

    def record(name, margin, ok):
        t, f, worst = counters.get(name, (0, 0, 0.0))
        counters[name] = (t + 1, f + (0 if ok else 1),
                          margin if abs(margin) > abs(worst) else worst)

    for _ in range(trials):
        n = int(rng.integers(3, n_max + 1))

        nmat = random_kernel_matrix(rng, n, kernel_dim=1 + int(rng.integers(0, 2)))
        u_n = (nmat + nmat.T) / 2.0
        res = psd_compare(u_n, nmat.T @ pinv(u_n) @ nmat, tol)
        record("harmonic_dominates_symmetric_part", res.min_eigenvalue, res.passed)

        b = rng.normal(size=(n, n))
        p = b.T @ b + 0.5 * np.eye(n)
        f_size = int(rng.integers(1, n))
        f = rng.choice(n, size=f_size, replace=False)
        res = psd_compare(schur_complement(p, f), p, tol)
        record("schur_of_psd_dominated", res.min_eigenvalue, res.passed)

        a = rng.uniform(0.2, 3.0, size=n)
        star = star_schur_matrix(a)
        proj = np.eye(n) - np.ones((n, n)) / n
        res = psd_compare(pinv(star), proj @ np.diag(1.0 / a) @ proj, tol)
        record("star_pinv_dominated_by_inverse_degrees", res.min_eigenvalue, res.passed)

        lmat = _random_eulerian_dense(rng, n)
        dinv = np.diag(1.0 / np.diag(lmat))
        res = psd_compare(lmat.T @ dinv @ lmat, 2.0 * (lmat + lmat.T) / 2.0, tol)
        record("quadratic_form_degree_bound", res.min_eigenvalue, res.passed)

        m = random_kernel_matrix(rng, n, kernel_dim=1)
        f_size = int(rng.integers(1, n - 1))
        f = sorted(rng.choice(n, size=f_size, replace=False).tolist())
        keep = [i for i in range(n) if i not in set(f)]
        sc = schur_complement(m, f)[np.ix_(keep, keep)]
        via_pinv = pinv(projected_pinv_restriction(m, keep))
        defect = float(np.abs(sc - via_pinv).max()) / (1.0 + np.abs(sc).max())
        record("schur_matches_pinv_restriction", defect, defect <= tol)

        if n >= 4:
            f_all = sorted(rng.choice(n, size=int(rng.integers(2, n - 1)),
                                      replace=False).tolist())
            split = int(rng.integers(1, len(f_all)))
            f1, f2 = f_all[:split], f_all[split:]
            once = schur_complement(m, f_all)
            twice = schur_complement(schur_complement(m, f1), f2)
            defect = float(np.abs(once - twice).max()) / (1.0 + np.abs(once).max())
            record("schur_composition", defect, defect <= tol)

        res = _check_schur_robustness(rng, n, eps=0.1, tol=tol)
        record("schur_perturbation_stability", res.min_eigenvalue, res.passed)

    checks = tuple(FactCheck(name=k, trials=v[0], failures=v[1], worst=v[2])
                   for k, v in counters.items())
    return FactReport(checks=checks)


def _check_schur_robustness(rng, n, eps, tol):
    """One trial of the ((1+e)/(1-e))^2 Schur perturbation bound."""
    m = random_kernel_matrix(rng, n, kernel_dim=1)
    u = (m + m.T) / 2.0
    proj = u @ pinv(u)
    g = rng.normal(size=(n, n))
    e_raw = proj @ g @ proj
    current = asym_approx_error(m, m - e_raw)
    e_mat = e_raw * (eps / current)
    m_tilde = m + e_mat
    f_size = int(rng.integers(1, n - 1))
    f = rng.choice(n, size=f_size, replace=False)
    u_sc = undirectification(schur_complement(m, f))
    u_sc_tilde = undirectification(schur_complement(m_tilde, f))
    factor = ((1.0 + eps) / (1.0 - eps)) ** 2
    return psd_compare(u_sc_tilde, factor * u_sc, tol)
