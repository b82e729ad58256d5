"""scikit-learn style wrappers around the functional pipeline.

Spectral maps have no out-of-sample extension, so ``transform`` only accepts
the geometry seen by ``fit``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .eigensolver import DEFAULT_TOL, DEGENERACY_TOL, START_SEED, smallest_eigenpairs
from .embed_dim import RANK_TOL, embedding_dimension
from .geometry import PointCloud, TriangleMesh, graph_distance
from .laplacian import cotangent_laplacian, gaussian_graph_laplacian
from .registration import SIGN_SEED, register
from .spectral_maps import MAP_KINDS, spectral_map


def as_geometry(X, intrinsic_dim=2, n_neighbors=8):
    """Pass meshes and clouds through; wrap a point array as a PointCloud."""
    if isinstance(X, (TriangleMesh, PointCloud)):
        return X
    X = check_array(X, dtype=np.float64, ensure_min_samples=intrinsic_dim + 2)
    return PointCloud(X, intrinsic_dim, n_neighbors)


def laplacian_of(geometry, bandwidth="auto"):
    if isinstance(geometry, TriangleMesh):
        return cotangent_laplacian(geometry)
    if hasattr(geometry, "laplacian"):
        return geometry.laplacian()
    return gaussian_graph_laplacian(geometry, bandwidth)


class LaplacianEmbedding(TransformerMixin, BaseEstimator):
    """Eigenmap, diffusion map or GPS embedding of a mesh or point cloud.

    Parameters
    ----------
    n_components : int
    map_kind : {"eigenmap", "diffusion", "gps"}
    t : float, optional
        Diffusion time; defaults to ``1 / lambda_1``.
    n_eigs : int, optional
        Eigenpairs to compute; at least ``n_components``.
    intrinsic_dim, n_neighbors, bandwidth
        Used when ``X`` is a point array.
    tol, seed
        Eigensolver settings.

    Attributes
    ----------
    spectrum_ : Spectrum
    eigenvalues_ : ndarray
        Nonconstant eigenvalues used by the map.
    embedding_ : ndarray, shape (N, n_components)
    """

    def __init__(self, n_components=3, map_kind="eigenmap", t=None, n_eigs=None, intrinsic_dim=2, n_neighbors=8, bandwidth="auto", tol=DEFAULT_TOL, seed=START_SEED):
        self.n_components = n_components
        self.map_kind = map_kind
        self.t = t
        self.n_eigs = n_eigs
        self.intrinsic_dim = intrinsic_dim
        self.n_neighbors = n_neighbors
        self.bandwidth = bandwidth
        self.tol = tol
        self.seed = seed

    def fit(self, X, y=None):
        if self.map_kind not in MAP_KINDS:
            raise ValueError(f"map_kind must be one of {MAP_KINDS}, got {self.map_kind!r}")
        if int(self.n_components) < 1:
            raise ValueError("n_components must be at least 1")
        geom = as_geometry(X, self.intrinsic_dim, self.n_neighbors)
        count = max(int(self.n_components), int(self.n_eigs or 0))
        self.geometry_ = geom
        self.spectrum_ = smallest_eigenpairs(laplacian_of(geom, self.bandwidth), count, tol=self.tol, seed=self.seed)
        coords = spectral_map(self.spectrum_, int(self.n_components), self.map_kind, self.t)
        self.coords_ = coords
        self.embedding_ = coords.coords
        self.eigenvalues_ = coords.eigenvalues
        self.n_features_in_ = geom.vertices.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        V = X.vertices if isinstance(X, (TriangleMesh, PointCloud)) else check_array(X, dtype=np.float64)
        if V.shape != self.geometry_.vertices.shape or not np.array_equal(V, self.geometry_.vertices):
            raise ValueError("spectral maps are defined only on the fitted geometry")
        return self.embedding_

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


class EmbeddingDimensionEstimator(BaseEstimator):
    """Empirical embedding dimension of a geometry's eigenmap.

    Attributes
    ----------
    m_star_ : int or None
    report_ : EmbedDimReport
    """

    def __init__(self, m_max=8, delta=None, tau="auto", rank_tol=RANK_TOL, intrinsic_dim=2, n_neighbors=8, bandwidth="auto", seed=START_SEED):
        self.m_max = m_max
        self.delta = delta
        self.tau = tau
        self.rank_tol = rank_tol
        self.intrinsic_dim = intrinsic_dim
        self.n_neighbors = n_neighbors
        self.bandwidth = bandwidth
        self.seed = seed

    def fit(self, X, y=None):
        geom = as_geometry(X, self.intrinsic_dim, self.n_neighbors)
        spec = smallest_eigenpairs(laplacian_of(geom, self.bandwidth), int(self.m_max), seed=self.seed)
        gd = geom.distances() if hasattr(geom, "distances") else graph_distance(geom)
        self.spectrum_ = spec
        self.report_ = embedding_dimension(spec, geom, gd, int(self.m_max), self.delta, self.tau, self.rank_tol)
        self.m_star_ = self.report_.m_star
        return self


class SpectralMatcher(BaseEstimator):
    """Closest-point correspondence between two shapes' aligned eigenmaps.

    ``fit(A, B)`` stores the map A -> B; ``predict()`` returns it.
    """

    def __init__(self, m=6, mode="exhaustive", degeneracy_tol=DEGENERACY_TOL, n_eigs=None, seed=SIGN_SEED):
        self.m = m
        self.mode = mode
        self.degeneracy_tol = degeneracy_tol
        self.n_eigs = n_eigs
        self.seed = seed

    def fit(self, X, Y):
        count = max(int(self.m) + 4, int(self.n_eigs or 0))
        ga, gb = as_geometry(X), as_geometry(Y)
        self.spectrum_a_ = smallest_eigenpairs(laplacian_of(ga), count)
        self.spectrum_b_ = smallest_eigenpairs(laplacian_of(gb), count)
        self.correspondence_ = register(self.spectrum_a_, self.spectrum_b_, int(self.m), self.mode, self.degeneracy_tol, self.seed)
        self.map_ = self.correspondence_.map
        self.cost_ = self.correspondence_.cost
        return self

    def predict(self, X=None):
        check_is_fitted(self, "map_")
        return self.map_
