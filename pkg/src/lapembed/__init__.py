"""Laplacian eigenfunction maps, their embedding dimension and spectral correspondence."""

__version__ = "0.1.0"

from .analytic import (
    FlatTorusGrid,
    sphere_coordinate_eigenmap,
    sphere_spectrum,
    torus_eigenfunction,
    torus_embedding_dimension,
    torus_lower_bound,
    torus_proof_basis_coords,
    torus_spectrum,
)
from .eigensolver import Spectrum, degenerate_groups, dense_oracle, smallest_eigenpairs
from .embed_dim import EmbedDimReport, embedding_dimension, immersion_rank, injectivity_scan, self_intersection_check
from .estimators import EmbeddingDimensionEstimator, LaplacianEmbedding, SpectralMatcher
from .exceptions import (
    AlignmentError,
    AssemblyError,
    ConvergenceError,
    DisconnectedError,
    DuplicatePointError,
    GeometryError,
    LapEmbedError,
    ParseError,
    UnreachableError,
)
from .geometry import (
    GraphDistances,
    PointCloud,
    TriangleMesh,
    bumpy_ellipsoid,
    graph_distance,
    icosphere,
    load_mesh,
    load_point_cloud,
    save_mesh,
)
from .heat_kernel import (
    HeatKernelTruncation,
    SeparationCertificate,
    empirical_remainder,
    heat_kernel_partial_sums,
    partial_heat_kernel,
    separation_certificate,
)
from .laplacian import LaplacianPair, cotangent_laplacian, gaussian_graph_laplacian
from .registration import (
    Correspondence,
    align_degenerate_groups,
    match_closest,
    register,
    sign_search,
    stability_probe,
)
from .spectral_maps import EmbeddingCoords, diffusion_map, eigenmap, gps_map, spectral_map
