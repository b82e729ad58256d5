import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lapembed.estimators import EmbeddingDimensionEstimator, LaplacianEmbedding, SpectralMatcher
from lapembed.spectral_maps import diffusion_map

from conftest import relabeled_copy


def test_params_roundtrip():
    est = LaplacianEmbedding(n_components=4, map_kind="gps")
    c = clone(est)
    assert c.get_params() == est.get_params()


def test_fit_transform_mesh(ico3):
    est = LaplacianEmbedding(3)
    Y = est.fit_transform(ico3)
    assert Y.shape == (ico3.n_vertices, 3)
    assert np.array_equal(est.transform(ico3), Y)
    np.testing.assert_allclose(est.eigenvalues_, est.spectrum_.eigenvalues[1:4])


def test_diffusion_matches_function(ico3):
    est = LaplacianEmbedding(4, map_kind="diffusion", t=0.01, n_eigs=6).fit(ico3)
    np.testing.assert_array_equal(est.embedding_, diffusion_map(est.spectrum_, 4, 0.01).coords)


def test_point_array_input(sphere_cloud):
    est = LaplacianEmbedding(2, n_neighbors=10).fit(sphere_cloud.points)
    assert est.embedding_.shape == (250, 2) and est.n_features_in_ == 3
    with pytest.raises(ValueError):
        est.transform(sphere_cloud.points + 1)


def test_not_fitted_and_bad_params(ico2):
    with pytest.raises(NotFittedError):
        LaplacianEmbedding().transform(ico2)
    with pytest.raises(ValueError):
        LaplacianEmbedding(map_kind="pca").fit(ico2)
    with pytest.raises(ValueError):
        LaplacianEmbedding(n_components=0).fit(ico2)


def test_dimension_estimator(ico3):
    est = EmbeddingDimensionEstimator(m_max=5).fit(ico3)
    assert est.m_star_ == 3 and est.report_.m_star == 3


def test_matcher(bumpy):
    perm = np.random.default_rng(4).permutation(bumpy.n_vertices)
    B = relabeled_copy(bumpy, np.eye(3), perm)
    mapped = SpectralMatcher(m=6).fit(bumpy, B).predict()
    assert np.mean(mapped == np.argsort(perm)) == 1.0
