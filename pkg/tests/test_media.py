import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsfmaxwell.lattice import make_grid
from nsfmaxwell.media import (Geometry, build_medium, check_assumption, custom_medium, edge_fractions,
                              indicator, tensor_adjoint)

GEO = Geometry()


def test_indicator_examples():
    assert indicator(GEO, (0, 0, 0)) == 1
    assert indicator(GEO, (0.5, 0.5, 0.5)) == 0
    assert indicator(GEO, (0.5, 0, 0)) == 1  # on an x-directed edge cylinder
    assert indicator(GEO, (1.0, 1.0, 0.0)) == 1  # periodic wrap of a corner
    pts = np.array([[0, 0, 0], [0.5, 0.5, 0.5]])
    np.testing.assert_array_equal(indicator(GEO, pts), [1, 0])


def test_geometry_validation():
    with pytest.raises(ValueError):
        Geometry(r=0.1, s=0.2)
    with pytest.raises(ValueError):
        Geometry(a=0)


def test_photonic_crystal_reduction():
    g = make_grid(1, 4, 4, 4)
    m = build_medium(g, GEO, "chiral", 13, 1, 0.0)
    assert not np.any(m.xi_d) and not np.any(m.zeta_d)
    assert check_assumption(m).passed


def test_vacuum_is_identity():
    g = make_grid(1, 4, 4, 4)
    m = build_medium(g, GEO, "chiral", 1, 1, 0.0)
    eye = np.broadcast_to(np.eye(3), m.eps_d.shape)
    np.testing.assert_array_equal(m.eps_d, eye)
    np.testing.assert_array_equal(m.phi, eye)
    assert m.is_vacuum_like()


def test_chiral_phi_values():
    g = make_grid(1, 8, 8, 8)
    m = build_medium(g, GEO, "chiral", 13, 1, 0.5)
    d = np.diagonal(m.phi, axis1=1, axis2=2).real
    off = m.phi - np.einsum("pi,ij->pij", d, np.eye(3))
    assert not np.any(off)
    # filling f in {0, 1/2, 1} gives eps_o + (eps_i - eps_o) f - gamma^2 f^2
    allowed = {1.0, 12.75, 1 + 12 * 0.5 - 0.25 * 0.25}
    assert set(np.round(np.unique(d), 12)) <= {round(x, 12) for x in allowed}
    assert {1.0, 12.75} <= set(np.round(np.unique(d), 12))


@pytest.mark.parametrize("params, passed", [((13, 1, 0.5), True), ((1, 1, 0.8), True), ((13, 1, 3.7), False)])
def test_check_assumption_examples(params, passed):
    g = make_grid(1, 4, 4, 4)
    report = check_assumption(build_medium(g, GEO, "chiral", *params))
    assert report.passed is passed
    if params == (1, 1, 0.8):
        assert np.isclose(report.phi_min_eig, 0.36)
    if not passed:
        assert report.phi_min_eig < 0 and any("Phi" in m for m in report.messages)


def test_require_hhpd_rejects_strong_chirality():
    with pytest.raises(ValueError, match="sqrt"):
        build_medium(make_grid(1, 2, 2, 2), GEO, "chiral", 13, 1, 3.7, require_hhpd=True)


def test_rejects_bad_parameters():
    g = make_grid(1, 2, 2, 2)
    with pytest.raises(ValueError):
        build_medium(g, GEO, "chiral", -1, 1, 0)
    with pytest.raises(ValueError):
        build_medium(g, GEO, "chiral", 13, 1, -0.5)
    with pytest.raises(ValueError):
        build_medium(g, GEO, "tellegen", 13, 1, 0.5)


def test_pseudochiral_structure():
    g = make_grid(1, 6, 6, 6)
    m = build_medium(g, GEO, "pseudochiral", 13, 1, 3.0)
    mask = np.zeros((3, 3), bool)
    mask[0, 2] = mask[2, 0] = True
    assert not np.any(m.xi_d[:, ~mask])
    assert np.any(m.xi_d[:, mask])
    assert check_assumption(m).passed


@given(kind=st.sampled_from(["chiral", "pseudochiral"]), eps_i=st.floats(1.0, 20.0),
       frac=st.floats(0.0, 0.99), n=st.integers(2, 5))
def test_structural_invariants(kind, eps_i, frac, n):
    g = make_grid(1, n, n, n)
    gamma = frac * np.sqrt(eps_i)
    m = build_medium(g, GEO, kind, eps_i, 1.0, gamma)
    np.testing.assert_array_equal(tensor_adjoint(m.xi_d), m.zeta_d)
    np.testing.assert_allclose(m.phi, tensor_adjoint(m.phi), atol=1e-13)
    report = check_assumption(m)
    assert report.xi_adjoint_is_zeta and report.hermitian
    assert report.passed  # eps_i >= eps_o and gamma < sqrt(eps_i)


def test_edge_fractions_are_two_node_averages():
    g = make_grid(1, 8, 8, 8)
    f = edge_fractions(g, GEO)
    assert set(np.unique(f)) <= {0.0, 0.5, 1.0}
    # x edge at the origin lies on a cylinder axis: both nodes inside
    assert f[0, 0] == 1.0


def test_custom_medium_shapes():
    n = 8
    eye = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    m = custom_medium(eye, eye, np.zeros_like(eye), np.zeros_like(eye))
    assert m.kind == "custom" and check_assumption(m).passed
    with pytest.raises(ValueError):
        custom_medium(eye, eye[:4], eye, eye)
