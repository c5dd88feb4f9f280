import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_complex
from nsfmaxwell.curl import build_curl
from nsfmaxwell.lattice import make_grid
from nsfmaxwell.oracle import dense_T
from nsfmaxwell.spectral import (FourierTransformer, RankConditionError, adjoint_T, build_svd,
                                 check_rank_parameters, eigen_diagonals, forward_T)

nonzero_k = st.tuples(*[st.floats(0.0, 0.5)] * 3).filter(lambda k: max(k) > 1e-3)
uniform_n = st.integers(2, 5)


def naive_T(grid, k, v):
    """O(n^2) summation with the +i sign convention and the Bloch phase ramp."""
    out = np.zeros(grid.n, dtype=complex)
    idx = [(a, b, c) for c in range(grid.n3) for b in range(grid.n2) for a in range(grid.n1)]
    for row, (i1, i2, i3) in enumerate(idx):
        ramp = np.exp(2j * np.pi * (k[0] * i1 / grid.n1 + k[1] * i2 / grid.n2 + k[2] * i3 / grid.n3))
        acc = 0
        for col, (j1, j2, j3) in enumerate(idx):
            acc += np.exp(2j * np.pi * (i1 * j1 / grid.n1 + i2 * j2 / grid.n2 + i3 * j3 / grid.n3)) * v[col]
        out[row] = ramp * acc / np.sqrt(grid.n)
    return out


def test_axis_eigenvalues_of_two_point_block():
    d = eigen_diagonals(make_grid(1, 2, 2, 2), (0.5, 0, 0))
    vals = set(np.round(d.lambda1 * make_grid(1, 2, 2, 2).delta_x, 12))
    assert vals == {complex(-1, 1), complex(-1, -1)}
    # and they are the eigenvalues of the explicit 2x2 block
    np.testing.assert_allclose(sorted(np.linalg.eigvals([[-1, 1], [-1, -1]]), key=np.imag),
                               sorted(vals, key=np.imag))


def test_min_lambda_q_at_x_point():
    d = eigen_diagonals(make_grid(1, 2, 2, 2), (0.5, 0, 0))
    assert np.isclose(d.lambda_q.min(), 8.0)


def test_lambda_q_definition_and_lambda_p_rank():
    d = eigen_diagonals(make_grid(1, 4, 4, 4), (0.1, 0.3, 0.2))
    np.testing.assert_allclose(d.lambda_q, np.sum(np.abs(d.lam) ** 2, axis=0))
    assert np.all(d.lambda_q > 0)
    assert np.all(np.max(np.abs(d.lambda_p), axis=0) > 0)


def test_rank_failures():
    g = make_grid(1, 2, 2, 2)
    with pytest.raises(RankConditionError, match="k = 0"):
        eigen_diagonals(g, (0, 0, 0))
    with pytest.raises(RankConditionError, match="delta_z == beta"):
        check_rank_parameters(g, 2.0, 1.0)
    with pytest.raises(RankConditionError, match="alpha\\*delta_x"):
        check_rank_parameters(g, 2.0, 2.0)
    with pytest.raises(RankConditionError):
        build_svd(g, (0.5, 0, 0), 1.0, 0.0)


@pytest.mark.parametrize("k", [(0.5, 0, 0), (0.25, 0.25, 0.25)])
def test_transform_matches_naive_sum(k):
    g = make_grid(1, 2, 2, 2)
    v = random_complex(np.random.default_rng(0), g.n)
    F = FourierTransformer(g, k)
    np.testing.assert_allclose(forward_T(F, v), naive_T(g, k, v), atol=1e-13)
    np.testing.assert_allclose(dense_T(g, k) @ v, naive_T(g, k, v), atol=1e-13)


@given(n=uniform_n, k=nonzero_k, seed=st.integers(0, 2**32 - 1))
def test_transform_unitary(n, k, seed):
    g = make_grid(1, n, n + 1, n)
    v = random_complex(np.random.default_rng(seed), g.n)
    F = FourierTransformer(g, k)
    w = forward_T(F, v)
    assert abs(np.linalg.norm(w) - np.linalg.norm(v)) <= 1e-13 * np.linalg.norm(v)
    np.testing.assert_allclose(adjoint_T(F, w), v, atol=1e-13 * np.linalg.norm(v))


def test_transform_dimension_check():
    F = FourierTransformer(make_grid(1, 2, 2, 2), (0.5, 0, 0))
    with pytest.raises(ValueError):
        F.forward(np.zeros(7))


@pytest.mark.parametrize("n, k", [(2, (0.5, 0, 0)), (3, (0.25, 0.25, 0.25)), (4, (0.1, 0.2, 0.3))])
def test_pi_blocks_orthonormal(n, k):
    svd = build_svd(make_grid(1, n, n, n), k)
    Pi = np.stack([svd.pi1, svd.pi2, svd.pi0])  # (3 blocks, 3 components, n)
    gram = np.einsum("acp,bcp->abp", Pi.conj(), Pi)
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(3)[:, :, None], gram.shape), atol=1e-12)


@given(n=uniform_n, k=nonzero_k, seed=st.integers(0, 2**32 - 1))
def test_svd_identity_matrix_free(n, k, seed):
    g = make_grid(1, n, n, n)
    svd = build_svd(g, k)
    C = build_curl(g, k)
    rng = np.random.default_rng(seed)
    y = random_complex(rng, 2 * g.n)
    lhs = C.apply(svd.apply_Qr(y))
    rhs = svd.apply_Pr(svd.sigma_r * y)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)
    np.testing.assert_allclose(svd.apply_Qr_adjoint(svd.apply_Qr(y)), y, atol=1e-12 * np.linalg.norm(y))
    np.testing.assert_allclose(svd.apply_Pr_adjoint(svd.apply_Pr(y)), y, atol=1e-12 * np.linalg.norm(y))
    # C^* P_r = Q_r Sigma_r
    lhs = C.apply_adjoint(svd.apply_Pr(y))
    assert np.linalg.norm(lhs - svd.apply_Qr(svd.sigma_r * y)) <= 1e-12 * np.linalg.norm(lhs)


def test_pr_adjoint_kills_p0():
    g = make_grid(1, 3, 3, 3)
    svd = build_svd(g, (0.2, 0.1, 0.4))
    z = random_complex(np.random.default_rng(3), g.n)
    assert np.linalg.norm(svd.apply_Pr_adjoint(svd.apply_P0(z))) <= 1e-12 * np.linalg.norm(z)
    assert np.linalg.norm(svd.apply_Qr_adjoint(svd.apply_Q0(z))) <= 1e-12 * np.linalg.norm(z)


def test_curl_curl_eigen_identity():
    g = make_grid(1, 4, 4, 4)
    k = (0.25, 0.25, 0.25)
    svd = build_svd(g, k)
    C = build_curl(g, k)
    y = random_complex(np.random.default_rng(5), g.n)
    for block in ("Q1", "Q2"):
        cols = svd.block_columns(block)
        lhs = C.apply_adjoint(C.apply(cols @ y))
        rhs = cols @ (svd.diag.lambda_q * y)
        assert np.linalg.norm(lhs - rhs) <= 1e-11 * np.linalg.norm(rhs)


def test_dense_curl_spectrum_and_diagonalization():
    g = make_grid(1, 3, 3, 3)
    k = (0.1, 0.2, 0.3)
    d = eigen_diagonals(g, k)
    C = build_curl(g, k)
    T = dense_T(g, k)
    for l, Cl in enumerate(C.component_matrices()):
        np.testing.assert_allclose(Cl.toarray() @ T, T * d.lam[l][None, :], atol=1e-12 * np.abs(d.lam).max())
    M = C.assemble_dense()
    ev = np.sort(np.linalg.eigvalsh(M.conj().T @ M))
    expected = np.sort(np.concatenate([d.lambda_q, d.lambda_q, np.zeros(g.n)]))
    np.testing.assert_allclose(ev, expected, atol=1e-10 * expected.max())


def test_block_columns_match_apply():
    g = make_grid(1, 2, 2, 2)
    svd = build_svd(g, (0.5, 0, 0))
    y = random_complex(np.random.default_rng(2), 2 * g.n)
    Qr = np.hstack([svd.block_columns("Q1"), svd.block_columns("Q2")])
    Pr = np.hstack([svd.block_columns("P2"), svd.block_columns("P1")])
    np.testing.assert_allclose(Qr @ y, svd.apply_Qr(y), atol=1e-13)
    np.testing.assert_allclose(Pr @ y, svd.apply_Pr(y), atol=1e-13)


def test_apply_dimension_checks():
    svd = build_svd(make_grid(1, 2, 2, 2), (0.5, 0, 0))
    with pytest.raises(ValueError):
        svd.apply_Qr(np.zeros(3))
    with pytest.raises(ValueError):
        svd.apply_Pr_adjoint(np.zeros(16))
