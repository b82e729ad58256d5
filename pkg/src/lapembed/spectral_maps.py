"""Eigenmap, diffusion map and global point signature embeddings.

All three maps use eigenpairs ``1..m``; the constant mode is excluded. They
differ only by a diagonal column scaling, so their injectivity agrees.
"""

from dataclasses import dataclass

import numpy as np

from ._pairs import pair_norms, vertex_pairs
from .exceptions import LapEmbedError
from .geometry import FLOAT_FMT, TriangleMesh, save_point_cloud, write_off

MAP_KINDS = ("eigenmap", "diffusion", "gps")


@dataclass(frozen=True)
class EmbeddingCoords:
    """Per-vertex coordinates of a spectral map.

    ``scales[j]`` is the factor applied to eigenvector ``j + 1``; ``eigenvalues``
    are the corresponding ``lambda_{j+1}``.
    """

    coords: np.ndarray
    map_kind: str
    eigenvalues: np.ndarray
    scales: np.ndarray
    t: float = None
    source: str = ""

    @property
    def m(self):
        return self.coords.shape[1]

    @property
    def n(self):
        return self.coords.shape[0]

    def leading(self, m):
        """The same map restricted to its first ``m`` coordinates."""
        if not 1 <= m <= self.m:
            raise LapEmbedError(f"m={m} outside 1..{self.m}")
        return EmbeddingCoords(self.coords[:, :m], self.map_kind, self.eigenvalues[:m], self.scales[:m], self.t, self.source)

    def save_csv(self, path):
        header = [f"phi{j + 1}" for j in range(self.m)]
        save_point_cloud(self.coords, path, header=header)

    def save_off(self, path, mesh):
        """Write the image of ``mesh`` as an OFF surface (requires m = 3)."""
        if self.m != 3:
            raise LapEmbedError(f"OFF export needs m = 3, got {self.m}")
        write_off(path, self.coords, mesh.faces, comments=[f"{self.map_kind} image", f"t {FLOAT_FMT % self.t}" if self.t else "t -"])

    def as_mesh(self, mesh):
        if self.m != 3:
            raise LapEmbedError(f"mesh image needs m = 3, got {self.m}")
        return TriangleMesh(self.coords, mesh.faces, check_connected=False)


def _check_m(spec, m):
    m = int(m)
    if m < 1:
        raise LapEmbedError(f"m must be at least 1, got {m}")
    if m > spec.count:
        raise LapEmbedError(f"m={m} exceeds the {spec.count} nonconstant eigenpairs available")
    return m


def eigenmap(spec, m):
    """Vertex values of eigenvectors ``1..m``."""
    m = _check_m(spec, m)
    lam = np.array(spec.eigenvalues[1:m + 1])
    return EmbeddingCoords(np.array(spec.eigenvectors[:, 1:m + 1]), "eigenmap", lam, np.ones(m), None, spec.source)


def diffusion_map(spec, m, t=None):
    """Columns ``exp(-lambda_j t / 2) phi_j``; ``t`` defaults to ``1 / lambda_1``."""
    m = _check_m(spec, m)
    lam = np.array(spec.eigenvalues[1:m + 1])
    if t is None:
        if not spec.eigenvalues[1] > 0:
            raise LapEmbedError("default diffusion time needs lambda_1 > 0")
        t = 1.0 / spec.eigenvalues[1]
    t = float(t)
    if not t > 0:
        raise LapEmbedError(f"diffusion time must be positive, got {t}")
    s = np.exp(-lam * t / 2.0)
    return EmbeddingCoords(spec.eigenvectors[:, 1:m + 1] * s, "diffusion", lam, s, t, spec.source)


def gps_map(spec, m):
    """Global point signature: columns ``lambda_j^{-1/2} phi_j``."""
    m = _check_m(spec, m)
    lam = np.array(spec.eigenvalues[1:m + 1])
    if not lam[0] > 0:
        raise LapEmbedError(f"GPS needs lambda_1 > 0, got {lam[0]!r} (disconnected input?)")
    s = lam ** -0.5
    return EmbeddingCoords(spec.eigenvectors[:, 1:m + 1] * s, "gps", lam, s, None, spec.source)


def spectral_map(spec, m, kind="eigenmap", t=None):
    kind = {"eigen": "eigenmap"}.get(kind, kind)
    if kind == "eigenmap":
        return eigenmap(spec, m)
    if kind == "diffusion":
        return diffusion_map(spec, m, t)
    if kind == "gps":
        return gps_map(spec, m)
    raise LapEmbedError(f"unknown map kind {kind!r}; expected one of {MAP_KINDS}")


def local_distortion(coords, gd, radius, seed=0):
    """Empirical bi-Lipschitz bracket of a map over nearby vertex pairs.

    Over tested pairs with ``0 < d(x, y) <= radius`` returns the minimum and
    maximum of ``|Phi(x) - Phi(y)| / d(x, y)``. Every pair is used for
    N <= 2000, else 10^6 seeded random pairs.
    """
    radius = float(radius)
    if not radius > 0:
        raise LapEmbedError("radius must be positive")
    X = getattr(coords, "coords", coords)
    i, j, _ = vertex_pairs(len(X), seed=seed)
    d = gd.between(i, j)
    keep = (d <= radius) & (d > 0)
    if not keep.any():
        raise LapEmbedError(f"no vertex pairs within radius {radius}")
    ratio = pair_norms(X, i[keep], j[keep]) / d[keep]
    return float(ratio.min()), float(ratio.max())
