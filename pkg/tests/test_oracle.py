import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_complex
from nsfmaxwell.curl import build_curl
from nsfmaxwell.lattice import make_grid
from nsfmaxwell.media import Geometry, build_medium
from nsfmaxwell.nfsep import MaterialBlock, NfsepOperator
from nsfmaxwell.oracle import (AssumptionViolation, DenseSizeError, build_dense_bundle, dense_gep_eigen,
                               dense_hsep, dense_svd_check, dump_triplets, lemma_conditions_scan,
                               load_triplets)
from nsfmaxwell.spectral import build_svd

GEO = Geometry()
# smallest positive GEP frequencies at n = 2^3, k = (1/2, 0, 0), from the dense QZ solve
DENSE_CHIRAL_N2 = np.array([0.8726282076696007, 0.8726445034116195, 1.299505627552373])
DENSE_WEAK_N2 = np.array([2.2856871980536444, 2.2860414015860546, 3.99720321577484])


def bundle(grid, kind="chiral", params=(13, 1, 0.5), k=(0.5, 0, 0)):
    return build_dense_bundle(grid, k, build_medium(grid, GEO, kind, *params))


def test_bundle_dimensions(grid2):
    b = bundle(grid2)
    n = grid2.n
    assert b.gep_lhs.shape == b.B.shape == b.A.shape == (6 * n, 6 * n)
    assert b.nfsep.shape == b.A_r.shape == b.J.shape == (4 * n, 4 * n)
    assert all(np.all(np.isfinite(M)) for M in (b.C, b.B, b.nfsep, b.A_r, b.J, b.A))


def test_vacuum_zero_count(grid2):
    spec = dense_gep_eigen(bundle(grid2, params=(1, 1, 0)))
    assert len(spec.zero) == 2 * grid2.n
    assert len(spec.nonzero) == 4 * grid2.n


def test_chiral_real_and_symmetric(grid2):
    spec = dense_gep_eigen(bundle(grid2))
    nz = spec.nonzero
    assert np.abs(nz.imag).max() <= 1e-10 * spec.scale
    pos = np.sort(nz.real[nz.real > 0])
    neg = np.sort(-nz.real[nz.real < 0])
    np.testing.assert_allclose(pos, neg, rtol=1e-10)
    np.testing.assert_allclose(pos[:3], DENSE_CHIRAL_N2, rtol=1e-10)


def test_weak_medium_frequencies(grid2):
    spec = dense_gep_eigen(bundle(grid2, params=(1, 1, 0.8)))
    pos = np.sort(spec.nonzero.real[spec.nonzero.real > 0])
    np.testing.assert_allclose(pos[:3], DENSE_WEAK_N2, rtol=1e-10)


@pytest.mark.parametrize("params", [(13, 1, 0.5), (1, 1, 0.8), (13, 1, 0)])
def test_hermitian_reformulation(grid2, params):
    b = bundle(grid2, params=params)
    h = dense_hsep(b)
    assert h.hermitian_defect <= 1e-12
    assert np.sum(h.zero_mask) == 2 * grid2.n
    gep = dense_gep_eigen(b).nonzero.real
    np.testing.assert_allclose(np.sort(h.nonzero), np.sort(gep), atol=1e-10 * np.abs(gep).max())


def test_hermitian_vacuum_spectrum(grid2):
    b = bundle(grid2, params=(1, 1, 0))
    h = dense_hsep(b)
    root = np.sqrt(b.factors.diag.lambda_q)
    expected = np.sort(np.concatenate([root, root, -root, -root, np.zeros(2 * grid2.n)]))
    np.testing.assert_allclose(h.omega, expected, atol=1e-10 * root.max())


def test_hermitian_requires_assumption(grid2):
    b = bundle(grid2, params=(13, 1, 3.7))
    assert b.A is None and b.A_r is None
    with pytest.raises(AssumptionViolation):
        dense_hsep(b)


@pytest.mark.parametrize("n", [2, 4])
@pytest.mark.parametrize("k", [(0.5, 0, 0), (0.25, 0.25, 0.25)])
def test_svd_report(n, k):
    report = dense_svd_check(bundle(make_grid(1, n, n, n), k=k))
    assert report.max_defect() <= 1e-12
    assert report.null_singular_values <= 1e-12


def test_nfsep_spectrum_equals_nonzero_gep(grid2):
    b = bundle(grid2)
    nz = dense_gep_eigen(b).nonzero
    red = np.linalg.eigvals(b.nfsep)
    key = lambda w: np.lexsort((w.imag, w.real))
    a, c = nz[key(nz)], red[key(red)]
    np.testing.assert_allclose(a, c, atol=1e-10 * np.abs(a).max())


def test_matrix_free_agrees_with_dense(grid4, chiral4):
    k = (0.25, 0.25, 0.25)
    b = build_dense_bundle(grid4, k, chiral4)
    rng = np.random.default_rng(0)
    svd = build_svd(grid4, k)
    op_g = NfsepOperator(svd, MaterialBlock(chiral4), "general")
    op_h = NfsepOperator(svd, MaterialBlock(chiral4), "hhpd")
    v3, y2, y4 = random_complex(rng, 3 * grid4.n), random_complex(rng, 2 * grid4.n), random_complex(rng, 4 * grid4.n)
    rel = lambda a, ref: np.linalg.norm(a - ref) / np.linalg.norm(ref)
    assert rel(build_curl(grid4, k).apply(v3), b.C @ v3) <= 1e-11
    assert rel(svd.apply_Qr(y2), b.basis["Qr"] @ y2) <= 1e-11
    assert rel(svd.apply_Pr(y2), b.basis["Pr"] @ y2) <= 1e-11
    assert rel(op_g.matvec(y4), b.nfsep @ y4) <= 1e-11
    assert rel(op_h.apply_Ar(y4), b.A_r @ y4) <= 1e-11


def test_dense_ar_is_positive_definite(grid2, chiral2):
    b = build_dense_bundle(grid2, (0.5, 0, 0), chiral2)
    L = np.linalg.cholesky(b.A_r)
    assert np.min(np.abs(np.diag(L))) > 0


def test_size_guard():
    g = make_grid(1, 8, 8, 8)
    with pytest.raises(DenseSizeError):
        build_dense_bundle(g, (0.5, 0, 0), build_medium(g, GEO, "chiral", 13, 1, 0.5))


def test_lemma_scan_random_and_failures():
    rng = np.random.default_rng(1)
    ks = rng.uniform(0, 0.5, size=(200, 3))
    ks[ks == 0] = 0.25
    g = make_grid(1, 4, 4, 4)
    assert lemma_conditions_scan(g, ks).passed
    zero = lemma_conditions_scan(g, [(0, 0, 0)])
    assert not zero.passed and "singular" in zero.failures[0][1]
    bad = lemma_conditions_scan(g, ks, 1.0, 1.0)
    assert not bad.parameters_ok and bad.checked == 0
    assert any("delta_z == beta*delta_y" in m for m in bad.parameter_messages)
    with pytest.raises(ValueError):
        lemma_conditions_scan(g, ks, 0.0, 2.0)


@given(k=st.tuples(*[st.floats(1e-3, 0.5)] * 3), n=st.integers(2, 6))
def test_lemma_scan_agrees_with_basis_build(k, n):
    g = make_grid(1, n, n, n)
    assert lemma_conditions_scan(g, [k]).passed
    build_svd(g, k)  # does not raise


def test_triplet_round_trip(tmp_path, grid2):
    C = bundle(grid2).C
    path = tmp_path / "c.txt"
    count = dump_triplets(C, path)
    assert count == np.count_nonzero(C)
    lines = path.read_text().splitlines()
    assert lines[0] == f"# {C.shape[0]} {C.shape[1]} {count}" and lines[1] == "# row col re im"
    np.testing.assert_array_equal(load_triplets(path), C)
