import numpy as np
import pytest

from lapembed.geometry import PointCloud, TriangleMesh, bumpy_ellipsoid, graph_distance, icosphere
from lapembed.laplacian import cotangent_laplacian
from lapembed.eigensolver import smallest_eigenpairs


def relabeled_copy(mesh, rotation, perm, shift=0.0):
    """Rigidly moved copy whose vertex ``i`` is the original vertex ``perm[i]``."""
    inv = np.argsort(perm)
    return TriangleMesh(mesh.vertices[perm] @ rotation.T + shift, inv[mesh.faces])


@pytest.fixture(scope="session")
def ico2():
    return icosphere(2)


@pytest.fixture(scope="session")
def ico3():
    return icosphere(3)


@pytest.fixture(scope="session")
def ico4():
    return icosphere(4)


@pytest.fixture(scope="session")
def ico2_spec(ico2):
    return smallest_eigenpairs(cotangent_laplacian(ico2), 20)


@pytest.fixture(scope="session")
def ico3_spec(ico3):
    return smallest_eigenpairs(cotangent_laplacian(ico3), 12)


@pytest.fixture(scope="session")
def ico4_spec(ico4):
    return smallest_eigenpairs(cotangent_laplacian(ico4), 12)


@pytest.fixture(scope="session")
def ico2_gd(ico2):
    return graph_distance(ico2)


@pytest.fixture(scope="session")
def ico3_gd(ico3):
    return graph_distance(ico3)


@pytest.fixture(scope="session")
def bumpy():
    return bumpy_ellipsoid(3)


@pytest.fixture(scope="session")
def bumpy_spec(bumpy):
    return smallest_eigenpairs(cotangent_laplacian(bumpy), 12)


@pytest.fixture(scope="session")
def sphere_cloud():
    rng = np.random.default_rng(3)
    P = rng.standard_normal((250, 3))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    return PointCloud(P, 2, n_neighbors=10)


def tetrahedron():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh(v, f, metadata={"genus": 0})


def cycle_edges(n):
    return np.array([[i, (i + 1) % n] for i in range(n)])


def small_graphs():
    """``(name, LaplacianPair, count)`` for every N <= 300 test graph."""
    from lapembed.analytic import FlatTorusGrid
    from lapembed.laplacian import gaussian_graph_laplacian, graph_laplacian_from_edges

    out = []
    for n in (8, 50):
        out.append((f"cycle{n}", graph_laplacian_from_edges(n, cycle_edges(n), np.ones(n), np.inf), min(n - 1, 12)))
    out.append(("path3", graph_laplacian_from_edges(3, [[0, 1], [1, 2]], [1.0, 1.0], np.inf), 2))
    out.append(("pair", graph_laplacian_from_edges(2, [[0, 1]], [1.0], np.inf), 1))
    out.append(("tetra", cotangent_laplacian(tetrahedron()), 3))
    out.append(("ico2", cotangent_laplacian(icosphere(2)), 20))
    out.append(("bumpy2", cotangent_laplacian(bumpy_ellipsoid(2)), 12))
    out.append(("torus12x24", FlatTorusGrid(1, 2, (12, 24)).laplacian(), 16))
    theta = 2 * np.pi * np.arange(300) / 300
    out.append(("circle300", gaussian_graph_laplacian(PointCloud(np.column_stack([np.cos(theta), np.sin(theta)]), 1, 2)), 10))
    rng = np.random.default_rng(3)
    P = rng.standard_normal((250, 3))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    out.append(("cloud250", gaussian_graph_laplacian(PointCloud(P, 2, 10)), 12))
    return out
