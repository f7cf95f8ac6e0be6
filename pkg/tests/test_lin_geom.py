import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from ecomann.errors import ParameterError, RankDeficiencyError
from ecomann.lin_geom import (
    default_K,
    estimate_codim,
    expm_skew,
    knn_search,
    local_pca,
    skew_from_params,
)
from .conftest import random_orthonormal


def test_knn_returns_k_nearest():
    pts = np.array([[0.5], [0.0], [1.0], [4.0], [10.0], [-2.0]])
    idx = knn_search(pts, 0, 3)
    assert sorted(idx.tolist()) == [1, 2, 5]


def test_knn_excludes_query_and_breaks_ties_by_index():
    pts = np.array([[0.0], [1.0], [-1.0], [1.0]])
    idx = knn_search(pts, 0, 2)
    assert idx.tolist() == [1, 2]


def test_knn_k_too_large():
    with pytest.raises(ParameterError):
        knn_search(np.zeros((3, 2)), 0, 3)


def test_estimate_codim_gap_rule():
    # gaps are 0.1, 4.8, 0.05; the largest gap follows the second
    # eigenvalue, leaving two trailing small ones, so codim is 2
    assert estimate_codim(np.array([5.0, 4.9, 0.1, 0.05])) == 2


def test_estimate_codim_first_argmax_wins():
    # gaps 2, 2: ties resolve to the earlier gap, codim d - 1
    assert estimate_codim(np.array([5.0, 3.0, 1.0])) == 2


def test_estimate_codim_single_small_eigval():
    assert estimate_codim(np.array([1.0, 0.9, 0.8, 0.01])) == 1


@given(
    scale=st.floats(min_value=1e-3, max_value=1e3),
    seed=st.integers(min_value=0, max_value=10**6),
)
@settings(max_examples=50, deadline=None)
def test_estimate_codim_scale_invariant(scale, seed):
    rng = np.random.default_rng(seed)
    eig = np.sort(rng.uniform(0.0, 1.0, size=5))[::-1]
    assert estimate_codim(eig) == estimate_codim(eig * scale)


def test_local_pca_plane():
    rng = np.random.default_rng(0)
    basis = random_orthonormal(rng, 3, 2)
    u, v = np.meshgrid(np.linspace(-1, 1, 8), np.linspace(-1, 1, 8))
    pts = np.column_stack([u.ravel(), v.ravel()]) @ basis.T
    # center on an interior grid point so the in-plane spread is balanced
    frame = local_pca(pts, 27, 40)
    assert frame.codim == 1
    n = frame.normal_basis[:, 0]
    # the normal must be orthogonal to the plane
    assert np.abs(basis.T @ n).max() < 1e-10
    assert np.allclose(np.linalg.norm(n), 1.0)


def test_local_pca_eigvals_descending(sphere_frames):
    for frame in sphere_frames[:50]:
        eig = frame.eigvals
        assert np.all(np.diff(eig) <= 1e-12)


def test_local_pca_oracle_matches_numpy():
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((30, 4))
    K = 20
    frame = local_pca(pts, 0, K, l_override=2)
    nbrs = knn_search(pts, 0, K)
    x = pts[nbrs] - pts[0]
    cov = x.T @ x / (K - 1)
    eig_ref = np.sort(np.linalg.eigvalsh(cov))[::-1]
    assert np.allclose(frame.eigvals, eig_ref)
    # eigenvectors reproduce the covariance
    recon = frame.eigvecs @ np.diag(frame.eigvals) @ frame.eigvecs.T
    assert np.allclose(recon, cov, atol=1e-12)


def test_local_pca_rank_deficient():
    pts = np.tile(np.array([1.0, 2.0]), (10, 1))
    with pytest.raises(RankDeficiencyError):
        local_pca(pts, 0, 5)


def test_default_K():
    assert default_K(3) == 6
    assert default_K(1) == 2


def test_expm_skew_matches_scipy():
    rng = np.random.default_rng(5)
    for l in (1, 2, 3, 4, 6):
        n_par = l * (l - 1) // 2
        a = skew_from_params(rng.standard_normal(n_par), l)
        r = expm_skew(a)
        assert np.allclose(r, scipy.linalg.expm(a), atol=1e-9)


@given(seed=st.integers(min_value=0, max_value=10**6))
@settings(max_examples=40, deadline=None)
def test_expm_skew_is_rotation(seed):
    rng = np.random.default_rng(seed)
    l = int(rng.integers(1, 6))
    a = skew_from_params(rng.standard_normal(l * (l - 1) // 2), l)
    r = expm_skew(a)
    assert np.allclose(r.T @ r, np.eye(l), atol=1e-9)
    assert np.isclose(np.linalg.det(r), 1.0, atol=1e-9)


def test_expm_skew_rejects_nonskew():
    with pytest.raises(ParameterError):
        expm_skew(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_skew_from_params_roundtrip():
    p = np.array([1.0, -2.0, 3.0])
    a = skew_from_params(p, 3)
    assert np.allclose(a, -a.T)
    iu = np.triu_indices(3, k=1)
    assert np.allclose(a[iu], p)
