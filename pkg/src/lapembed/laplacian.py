"""Discrete Laplacians normalized to unit total volume.

Both assemblies return a :class:`LaplacianPair` ``(L, M)`` for the
generalized problem ``L phi = lam M phi``. ``M`` is diagonal and sums to 1,
so the constant mode is ``phi_0 = 1`` and eigenvalues are those of the shape
rescaled to unit volume (invariant under uniform scaling of the input).
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .exceptions import AssemblyError, DisconnectedError, GeometryError

logger = logging.getLogger(__name__)

COT_CLAMP = 1e6
MIN_ANGLE = 1e-6


@dataclass(frozen=True)
class LaplacianPair:
    """Sparse symmetric stiffness plus diagonal mass.

    Attributes
    ----------
    stiffness : scipy.sparse.csr_matrix
    mass : ndarray
        Diagonal of the mass operator, positive, summing to 1.
    kind : str
        ``"cotangent"``, ``"gaussian-graph"`` or ``"grid-graph"``.
    volume : float
        Total mass before normalization (area for meshes, degree sum for graphs).
        Eigenvalues divided by ``volume`` are those of the unnormalized shape.
    """

    stiffness: sparse.csr_matrix
    mass: np.ndarray
    kind: str
    volume: float = 1.0
    info: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.stiffness.shape[0]

    def mass_matrix(self):
        return sparse.diags(self.mass).tocsr()

    def symmetrized(self):
        """``M^{-1/2} L M^{-1/2}`` as a CSR matrix."""
        s = 1.0 / np.sqrt(self.mass)
        return sparse.diags(s) @ self.stiffness @ sparse.diags(s)

    def check(self, psd_tol=1e-9):
        """Assert the structural invariants; returns a dict of measured values."""
        L = self.stiffness
        scale = abs(L).max()
        asym = abs(L - L.T).max() / scale if scale > 0 else 0.0
        rowsum = np.abs(np.asarray(L.sum(axis=1)).ravel()).max() / max(scale, 1.0)
        if asym > 1e-12:
            raise AssemblyError(f"stiffness not symmetric: relative asymmetry {asym:.3e}")
        if rowsum > 1e-10:
            raise AssemblyError(f"stiffness rows do not sum to zero: {rowsum:.3e}")
        if not np.all(self.mass > 0):
            raise AssemblyError("mass must be positive")
        if abs(self.mass.sum() - 1.0) > 1e-12:
            raise AssemblyError(f"mass sums to {self.mass.sum()!r}, expected 1")
        return {"asymmetry": float(asym), "row_sum": float(rowsum)}

    def save_triplets(self, path):
        """Write the stiffness as ``row col value`` lines, then the mass diagonal."""
        coo = self.stiffness.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"# kind {self.kind} n {self.n} volume {self.volume!r}", "# stiffness"]
        lines += [f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order])]
        lines.append("# mass")
        lines += [f"{i} {i} {m:.17g}" for i, m in enumerate(self.mass)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load_triplets(cls, path):
        kind, n, volume = "unknown", None, 1.0
        section = None
        st, ma = [], []
        for line in Path(path).read_text().splitlines():
            if line.startswith("# kind"):
                tok = line.split()
                kind, n, volume = tok[2], int(tok[4]), float(tok[6])
            elif line.strip() == "# stiffness":
                section = st
            elif line.strip() == "# mass":
                section = ma
            elif line.strip():
                r, c, v = line.split()
                section.append((int(r), int(c), float(v)))
        st = np.array(st).reshape(-1, 3)
        L = sparse.csr_matrix((st[:, 2], (st[:, 0].astype(int), st[:, 1].astype(int))), shape=(n, n))
        mass = np.array([v for _, _, v in ma])
        return cls(L, mass, kind, volume)


def _assemble(n, i, j, w):
    """Stiffness ``D - W`` from symmetric off-diagonal weights on edge list (i, j)."""
    W = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n)).tocsr()
    W.sum_duplicates()
    deg = np.asarray(W.sum(axis=1)).ravel()
    L = (sparse.diags(deg) - W).tocsr()
    L.eliminate_zeros()
    return L, deg


def cotangent_laplacian(mesh):
    """Cotangent stiffness with lumped barycentric mass.

    Edge weights are ``(cot a + cot b) / 2`` over the two opposite angles.
    Angles below 1e-6 rad trigger a warning and cotangents are clamped to
    +-1e6.
    """
    v = mesh.vertices
    f = mesh.faces
    n = mesh.n_vertices
    if mesh.n_faces == 0:
        raise GeometryError("mesh has no faces")
    ncomp, labels = csgraph.connected_components(mesh.adjacency, directed=False)
    if ncomp > 1:
        raise DisconnectedError(np.bincount(labels))

    i0, i1, i2 = f[:, 0], f[:, 1], f[:, 2]
    cots = []
    n_bad = 0
    # angle at corner k is opposite edge (k+1, k+2)
    for a, b, c in ((i0, i1, i2), (i1, i2, i0), (i2, i0, i1)):
        u = v[b] - v[a]
        w = v[c] - v[a]
        dot = np.einsum("ij,ij->i", u, w)
        cr = np.linalg.norm(np.cross(u, w), axis=1)
        angle = np.arctan2(cr, dot)
        bad = (angle < MIN_ANGLE) | (angle > math.pi - MIN_ANGLE)
        n_bad += int(bad.sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = dot / cr
        cot = np.where(np.isfinite(cot), cot, np.sign(dot) * COT_CLAMP)
        cots.append(np.clip(cot, -COT_CLAMP, COT_CLAMP))
    if n_bad:
        warnings.warn(f"{n_bad} near-degenerate triangle angles; cotangent weights clamped to +-{COT_CLAMP:g}", RuntimeWarning, stacklevel=2)

    i = np.concatenate([i1, i2, i0])
    j = np.concatenate([i2, i0, i1])
    w = 0.5 * np.concatenate(cots)
    L, deg = _assemble(n, i, j, w)
    # diagonal is -sum of off-diagonals; a row with negative total weight is not a Laplacian
    if np.any(deg < -1e-12 * np.abs(w).max()):
        raise AssemblyError(f"{int((deg < 0).sum())} rows have negative total cotangent weight")

    areas = mesh.face_areas
    lumped = np.bincount(f.ravel(), weights=np.repeat(areas / 3.0, 3), minlength=n)
    if np.any(lumped <= 0):
        raise AssemblyError("vertex with zero lumped area")
    volume = float(lumped.sum())
    # 2-D cotangent weights are scale free, so only the mass carries the volume
    return LaplacianPair(L, lumped / volume, "cotangent", volume)


def gaussian_graph_laplacian(cloud, bandwidth="auto", k=None):
    """Gaussian-weight graph Laplacian on the symmetrized k-NN graph.

    Weights are ``exp(-|x_i - x_j|^2 / sigma^2)``; stiffness is ``D - W`` and
    mass ``D / sum(D)``. ``bandwidth="auto"`` takes the median k-NN edge
    length; ``bandwidth=np.inf`` gives unit weights.
    """
    k = cloud.n_neighbors if k is None else int(k)
    n = cloud.n_vertices
    if k > n - 1:
        raise GeometryError(f"k={k} exceeds N-1={n - 1}")
    if k < 1:
        raise GeometryError("k must be positive")
    edges, lengths = cloud.knn_edges(k)
    sigma = _resolve_bandwidth(bandwidth, lengths)
    return graph_laplacian_from_edges(n, edges, lengths, sigma, kind="gaussian-graph")


def _resolve_bandwidth(bandwidth, lengths):
    if isinstance(bandwidth, str):
        if bandwidth.lower() != "auto":
            raise GeometryError(f"bandwidth must be a positive number or 'auto', got {bandwidth!r}")
        return float(np.median(lengths))
    sigma = float(bandwidth)
    if not sigma > 0:
        raise GeometryError("bandwidth must be positive")
    return sigma


def graph_laplacian_from_edges(n, edges, lengths, sigma, kind="gaussian-graph"):
    """Assemble ``(D - W, D / sum D)`` from an undirected edge list."""
    edges = np.asarray(edges, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=float)
    w = np.exp(-(lengths ** 2) / sigma ** 2) if np.isfinite(sigma) else np.ones(len(lengths))
    L, deg = _assemble(n, edges[:, 0], edges[:, 1], w)
    if np.any(deg <= 0):
        raise DisconnectedError([1] * int((deg <= 0).sum()) + [int((deg > 0).sum())])
    ncomp, labels = csgraph.connected_components(L, directed=False)
    if ncomp > 1:
        raise DisconnectedError(np.bincount(labels))
    volume = float(deg.sum())
    return LaplacianPair(L, deg / volume, kind, volume, {"bandwidth": sigma})
