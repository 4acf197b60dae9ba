"""Dense oracle: pseudoinverses, Schur complements, approximation norms."""

import numpy as np
import pytest

import eulerlu as el
from eulerlu import oracle


def test_pinv_identity():
    assert np.allclose(oracle.pinv(np.eye(4)), np.eye(4))


def test_pinv_rank_one_laplacian():
    m = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert np.allclose(oracle.pinv(m), m / 4.0, atol=1e-14)


def test_pinv_zero_matrix():
    assert np.array_equal(oracle.pinv(np.zeros((3, 3))), np.zeros((3, 3)))


def test_pinv_moore_penrose_conditions():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 10))
        m = oracle.random_kernel_matrix(rng, n, kernel_dim=1)
        mp = oracle.pinv(m)
        assert np.abs(m @ mp @ m - m).max() <= 1e-9 * (1 + np.abs(m).max())
        assert np.abs(mp @ m @ mp - mp).max() <= 1e-9 * (1 + np.abs(mp).max())
        assert np.abs((m @ mp) - (m @ mp).T).max() <= 1e-9
        assert np.abs((mp @ m) - (mp @ m).T).max() <= 1e-9


def test_pinv_rejects_non_finite():
    with pytest.raises(el.NonFiniteError):
        oracle.pinv(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_schur_four_cycle_gives_three_cycle():
    L4 = el.from_edge_list([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
    s = oracle.schur_complement(L4.to_dense(), [3])
    L3 = el.from_edge_list([(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], n=4)
    assert np.allclose(s, L3.to_dense(), atol=1e-14)


def test_schur_empty_set_is_identity_op():
    m = np.random.default_rng(1).normal(size=(4, 4))
    assert np.array_equal(oracle.schur_complement(m, []), m)


def test_schur_diagonal_matrix():
    d = np.diag([1.0, 2.0, 3.0, 4.0])
    s = oracle.schur_complement(d, [0, 2])
    expect = np.zeros((4, 4))
    expect[1, 1] = 2.0
    expect[3, 3] = 4.0
    assert np.allclose(s, expect)


def test_schur_singular_pivot_block():
    m = np.zeros((3, 3))
    m[2, 2] = 1.0
    with pytest.raises(el.SingularPivotBlockError):
        oracle.schur_complement(m, [0, 1])


def test_asym_error_zero_for_equal():
    L = el.random_eulerian(8, edge_target=30, seed=0).to_dense()
    assert oracle.asym_approx_error(L, L) == 0.0


def test_asym_error_symmetric_scaling():
    u = el.from_edge_list([(0, 1, 1.0), (1, 0, 1.0)]).to_dense()
    assert abs(oracle.asym_approx_error(u, 1.25 * u) - 0.25) <= 1e-12


def test_asym_error_three_cycle_scaling():
    # directed 3-cycle scaled 1.1x: the antisymmetric part contributes a
    # factor sqrt(4/3) on top of the 0.1 scaling
    L = el.from_edge_list([(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).to_dense()
    got = oracle.asym_approx_error(L, 1.1 * L)
    assert abs(got - 0.1 * np.sqrt(4.0 / 3.0)) <= 1e-12


def test_asym_error_rejects_indefinite_symmetric_part():
    a = np.array([[1.0, 3.0], [3.0, 1.0]])
    with pytest.raises(el.NotPsdError):
        oracle.asym_approx_error(a, np.zeros((2, 2)))


def test_asym_error_rejects_kernel_mismatch():
    u = np.array([[1.0, -1.0], [-1.0, 1.0]])
    b = u + np.array([[0.5, 0.0], [0.0, 0.0]])
    with pytest.raises(el.KernelMismatchError):
        oracle.asym_approx_error(u, b)


def test_asym_error_permutation_invariance():
    rng = np.random.default_rng(5)
    L = el.random_eulerian(10, edge_target=40, seed=5).to_dense()
    b = L + 0.01 * oracle.star_schur_matrix(np.ones(10))
    perm = rng.permutation(10)
    p = np.eye(10)[perm]
    e1 = oracle.asym_approx_error(L, b)
    e2 = oracle.asym_approx_error(p @ L @ p.T, p @ b @ p.T)
    assert abs(e1 - e2) <= 1e-10 * (1 + e1)


def test_psd_compare_result_contract():
    res = oracle.psd_compare(np.eye(2), 2 * np.eye(2))
    assert res.passed and res.min_eigenvalue == pytest.approx(1.0)
    res = oracle.psd_compare(2 * np.eye(2), np.eye(2))
    assert not res.passed
    assert res.passed == (res.min_eigenvalue >= -res.tol)


def test_local_undirectification_two_cycle():
    L = el.from_edge_list([(0, 1, 1.0), (1, 0, 1.0)])
    u_local, d_local, nbrs = oracle.local_undirectification(L, 0)
    assert nbrs == [1]
    assert np.allclose(u_local, np.zeros((1, 1)))
    assert np.allclose(d_local, np.array([[1.0]]))


def test_local_undirectification_three_cycle():
    L = el.from_edge_list([(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    u_local, d_local, nbrs = oracle.local_undirectification(L, 0)
    assert nbrs == [1, 2]
    assert np.allclose(u_local, np.array([[0.25, -0.25], [-0.25, 0.25]]))
    assert np.allclose(d_local, np.diag([0.5, 0.5]))


def test_local_undirectification_matches_dense_definition():
    # the star Schur formula must equal the rank-one deflation of the star
    # block of the full symmetrization
    rng = np.random.default_rng(7)
    for seed in range(5):
        L = el.random_eulerian(12, edge_target=50, seed=seed)
        v = int(rng.integers(12))
        u = el.undirectification(L)
        nbrs_ref = sorted(set(L.in_adj[v]) | set(L.out_adj[v]))
        star = np.zeros_like(u)
        star[v, :] = u[v, :]
        star[:, v] = u[:, v]
        for j in nbrs_ref:
            star[j, j] = -u[j, v]
        dense = star - np.outer(u[:, v], u[v, :]) / u[v, v]
        u_local, _, nbrs = oracle.local_undirectification(L, v)
        assert nbrs == nbrs_ref
        assert np.allclose(u_local, dense[np.ix_(nbrs, nbrs)], atol=1e-12)


def test_local_undirectification_isolated_vertex():
    L = el.from_edge_list([(0, 1, 1.0), (1, 0, 1.0)], n=3)
    with pytest.raises(el.IsolatedVertexError):
        oracle.local_undirectification(L, 2)


def test_local_pinv_dominated_by_inverse_degrees_on_image():
    rng = np.random.default_rng(3)
    proj = lambda k: np.eye(k) - np.ones((k, k)) / k
    for seed in range(10):
        L = el.random_eulerian(10, edge_target=40, seed=seed)
        v = int(rng.integers(10))
        u_local, d_local, nbrs = oracle.local_undirectification(L, v)
        k = len(nbrs)
        if k < 2:
            continue
        p = proj(k)
        bound = p @ np.diag(1.0 / np.diag(d_local)) @ p
        assert oracle.psd_compare(oracle.pinv(u_local), bound).passed


def test_certificate_matrix_single_and_mixed():
    u = el.undirectification(el.random_eulerian(6, edge_target=20, seed=1))
    assert np.allclose(oracle.build_certificate_matrix([(1.0, u)]), u)
    assert np.allclose(oracle.build_certificate_matrix([(0.5, u), (0.5, u)]), u)


def test_certificate_matrix_rejects_bad_input():
    u = el.undirectification(el.random_eulerian(6, edge_target=20, seed=1))
    with pytest.raises(el.DimensionMismatchError):
        oracle.build_certificate_matrix([(0.5, u), (0.5, np.eye(3))])
    with pytest.raises(el.DimensionMismatchError):
        oracle.build_certificate_matrix([(0.7, u)])  # weights must sum to 1
    with pytest.raises(el.NotPsdError):
        oracle.build_certificate_matrix([(1.0, np.triu(np.ones((6, 6))))])
    with pytest.raises(el.NotPsdError):
        oracle.build_certificate_matrix([(1.0, -np.eye(6))])


def test_diagnose_exact_product_has_zero_residual():
    L = el.random_eulerian(12, edge_target=48, seed=2)
    d = L.to_dense()
    u = el.undirectification(d)
    diag = oracle.diagnose_factorization(d, d, u)
    assert diag.eps <= 1e-10
    assert diag.gamma > 0.5


def test_diagnose_two_cycle_single_pivot():
    L = el.from_edge_list([(0, 1, 1.0), (1, 0, 1.0)])
    d = L.to_dense()
    c = d[:, [0]]
    r = d[[0], :] / d[0, 0]
    product = c @ r
    diag = oracle.diagnose_factorization(d, product, el.undirectification(d))
    assert diag.eps <= 1e-12


def test_diagnose_scaled_perturbation_symmetric():
    u = el.from_edge_list([(0, 1, 1.0), (1, 0, 1.0)]).to_dense()
    delta = 0.03
    diag = oracle.diagnose_factorization(u, (1 + delta) * u, u)
    assert abs(diag.eps - delta) <= 1e-12


def test_diagnose_guards_size():
    big = np.zeros((oracle.DENSE_GUARD + 1, oracle.DENSE_GUARD + 1))
    with pytest.raises(el.TooLargeError):
        oracle.diagnose_factorization(big, big, big)


def test_projected_restriction_matches_schur():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(4, 10))
        m = oracle.random_kernel_matrix(rng, n, kernel_dim=1)
        f = sorted(rng.choice(n, size=int(rng.integers(1, n - 1)),
                              replace=False).tolist())
        keep = [i for i in range(n) if i not in set(f)]
        sc = oracle.schur_complement(m, f)[np.ix_(keep, keep)]
        via = oracle.pinv(oracle.projected_pinv_restriction(m, keep))
        assert np.abs(sc - via).max() <= 1e-9 * (1 + np.abs(sc).max())


def test_matrix_fact_suite_all_pass():
    rep = oracle.verify_matrix_facts(trials=100, n_max=12, seed=1)
    assert rep.all_passed, str(rep)


def test_harmonic_fact_equality_for_symmetric():
    # symmetric PSD N: N^T U^+ N equals U on the image
    rng = np.random.default_rng(4)
    b = rng.normal(size=(5, 5))
    n = b.T @ b
    harm = n.T @ oracle.pinv((n + n.T) / 2) @ n
    assert np.abs(harm - n).max() <= 1e-9 * (1 + np.abs(n).max())


def test_schur_of_diagonal_psd_entrywise():
    p = np.diag([1.0, 2.0, 3.0])
    s = oracle.schur_complement(p, [1])
    assert np.allclose(s, np.diag([1.0, 0.0, 3.0]))
    assert oracle.psd_compare(s, p).passed
