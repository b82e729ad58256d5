"""Empirical embedding dimension of a sampled shape.

``Phi^m`` is accepted at sample resolution when it separates geodesically far
vertices (injectivity), has a full-rank least-squares differential on every
vertex star (immersion) and, for meshes at ``m = 3``, its image has no
crossing faces. The result concerns the computed eigenbasis only: a
different basis of a degenerate eigenspace can behave differently, and no
search over bases is attempted.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import LapEmbedError
from .geometry import TriangleMesh
from .intersect import self_intersections

RANK_TOL = 1e-3
DELTA_EDGES = 3.0
TAU_EDGES = 0.5
FIRST_K = 16
# image distances below this fraction of the coordinate scale are roundoff
ROUNDOFF_FLOOR = 1e-12


class InjectivityResult(NamedTuple):
    passed: bool
    min_distance: float
    colliding: int
    vacuous: bool


class RankResult(NamedTuple):
    passed: bool
    min_ratio: float
    failing: int


def _as_array(coords):
    X = np.asarray(getattr(coords, "coords", coords), dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def image_edge_length(coords, geometry):
    """Median image-space length of the geometry's edges."""
    X = _as_array(coords)
    e = geometry.edges
    return float(np.median(np.linalg.norm(X[e[:, 0]] - X[e[:, 1]], axis=1)))


def resolve_tau(tau, coords, geometry):
    """``"auto"`` means half the median image edge length."""
    if isinstance(tau, str):
        if tau != "auto":
            raise LapEmbedError(f"tau must be a number or 'auto', got {tau!r}")
        return TAU_EDGES * image_edge_length(coords, geometry)
    tau = float(tau)
    if not tau >= 0:
        raise LapEmbedError("tau must be nonnegative")
    return tau


def nearest_far_distance(coords, gd, delta):
    """Per-vertex image distance to the closest vertex at graph distance ``>= delta``.

    Exact: image-space neighbours are visited in increasing distance with a
    KD-tree whose query size grows until a far vertex appears. Vertices
    without any far partner get ``inf``.
    """
    X = _as_array(coords)
    n = len(X)
    tree = cKDTree(X)
    out = np.full(n, np.inf)
    pending = np.arange(n)
    k = min(n, FIRST_K)
    while len(pending):
        dist, idx = tree.query(X[pending], k=k)
        dist = dist.reshape(len(pending), k)
        idx = idx.reshape(len(pending), k)
        far = gd.between(np.broadcast_to(pending[:, None], idx.shape), idx) >= delta
        found = far.any(axis=1)
        first = np.argmax(far, axis=1)
        rows = np.nonzero(found)[0]
        out[pending[rows]] = dist[rows, first[rows]]
        if k == n:
            break
        pending = pending[~found]
        k = min(n, 4 * k)
    return out


def injectivity_scan(coords, gd, delta, tau=0.0):
    """Check that far vertices have distinct images.

    Parameters
    ----------
    coords : EmbeddingCoords or ndarray, shape (N, m)
    gd : GraphDistances
        Anything with ``between(i, j)`` and ``n_vertices``.
    delta : float
        Pairs with graph distance ``>= delta`` are far.
    tau : float
        Image distances ``<= tau`` count as collisions. Distances within
        ``ROUNDOFF_FLOOR`` of the coordinate scale always do, so exact
        coincidences are not decided by rounding.

    Returns
    -------
    InjectivityResult
        ``(passed, min_distance, colliding, vacuous)``; ``colliding`` counts
        vertices with a far partner within ``tau`` and ``vacuous`` is set
        when no far pair exists (then ``passed`` is True).

    Every far pair is covered; no sampling is involved.
    """
    delta = float(delta)
    if not delta > 0:
        raise LapEmbedError("delta must be positive")
    tau = float(tau)
    if not tau >= 0:
        raise LapEmbedError("tau must be nonnegative")
    X = _as_array(coords)
    if len(X) != gd.n_vertices:
        raise LapEmbedError(f"coords have {len(X)} rows, distances cover {gd.n_vertices} vertices")
    near = nearest_far_distance(X, gd, delta)
    finite = np.isfinite(near)
    if not finite.any():
        return InjectivityResult(True, math.inf, 0, True)
    floor = ROUNDOFF_FLOOR * float(np.linalg.norm(np.abs(X).max(axis=0))) if X.size else 0.0
    colliding = int(np.count_nonzero(near[finite] <= max(tau, floor)))
    return InjectivityResult(colliding == 0, float(near[finite].min()), colliding, False)


def _stars(geometry):
    adj = geometry.adjacency
    deg = np.diff(adj.indptr)
    for g in np.unique(deg):
        v = np.nonzero(deg == g)[0]
        nbrs = adj.indices[adj.indptr[v][:, None] + np.arange(g)]
        yield v, nbrs


def local_rank_ratios(coords, geometry, n=None):
    """``s_n / s_1`` of the least-squares differential at every vertex.

    The tangent frame at a vertex is spanned by the top ``n`` principal
    directions of its star in the original geometry. Stars with at most ``n``
    neighbours, or whose offsets do not span ``n`` directions, get ratio 0.
    """
    X = _as_array(coords)
    n = geometry.intrinsic_dim if n is None else int(n)
    m = X.shape[1]
    ratio = np.zeros(len(X))
    for v, nbrs in _stars(geometry):
        if nbrs.shape[1] < n + 1:
            continue
        off = geometry.local_offsets(v[:, None], nbrs)
        _, s, vt = np.linalg.svd(off, full_matrices=False)
        T = off @ np.swapaxes(vt[:, :n], 1, 2)
        D = X[nbrs] - X[v][:, None, :]
        ok = s[:, n - 1] > 1e-10 * s[:, 0]
        if not ok.any():
            continue
        T, D, vv = T[ok], D[ok], v[ok]
        J = np.linalg.solve(np.swapaxes(T, 1, 2) @ T, np.swapaxes(T, 1, 2) @ D)
        if m < n:
            continue
        sj = np.linalg.svd(J, compute_uv=False)
        top = sj[:, 0]
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(top > 0, sj[:, n - 1] / top, 0.0)
        ratio[vv] = r
    return ratio


def immersion_rank(coords, geometry, n=None, rank_tol=RANK_TOL):
    """Local rank test of ``Phi^m``.

    Returns
    -------
    RankResult
        ``(passed, min_ratio, failing)`` where ``min_ratio`` is the smallest
        ``s_n / s_1`` over vertices and ``failing`` counts vertices below
        ``rank_tol``.
    """
    rank_tol = float(rank_tol)
    ratio = local_rank_ratios(coords, geometry, n)
    failing = int(np.count_nonzero(ratio < rank_tol))
    return RankResult(failing == 0, float(ratio.min()), failing)


def self_intersection_check(mesh, coords3):
    """Intersecting face pairs of the mesh drawn at ``coords3`` (shape (N, 3)).

    Faces sharing a vertex are never reported.
    """
    X = _as_array(coords3)
    if X.shape[1] != 3:
        raise LapEmbedError(f"self-intersection check needs m = 3, got {X.shape[1]}")
    return self_intersections(X, mesh.faces)


@dataclass(frozen=True)
class EmbedDimReport:
    """Outcome of :func:`embedding_dimension`.

    ``diagnostics`` holds one dict per tested ``m``. ``m_star`` is None when
    nothing up to ``m_max`` passes. The value describes the computed basis at
    sample resolution; it is not a search over all eigenbases.
    """

    m_star: int
    m_max: int
    delta: float
    rank_tol: float
    tau: object
    diagnostics: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return str(x)
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, list):
                return [clean(v) for v in x]
            return x

        return json.dumps(clean(self.to_dict()), indent=2, sort_keys=True)

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")


def embedding_dimension(source, geometry, gd, m_max, delta=None, tau="auto", rank_tol=RANK_TOL, m_min=None, check_faces=True):
    """Smallest ``m`` for which the leading map coordinates pass every check.

    Parameters
    ----------
    source : Spectrum or EmbeddingCoords
        A spectrum is turned into its eigenmap; coordinates are used as given
        and truncated to their first ``m`` columns.
    geometry : TriangleMesh, PointCloud or FlatTorusGrid
    gd : GraphDistances
    m_max : int
    delta : float, optional
        Far-pair threshold; default 3 mean edge lengths.
    tau : float or "auto"
        Collision threshold; "auto" is half the median image edge length at
        each ``m``.
    rank_tol : float
    m_min : int, optional
        First ``m`` tried; default the intrinsic dimension.
    check_faces : bool
        Run the face self-intersection test at ``m = 3`` for meshes.
    """
    if hasattr(source, "eigenvectors"):
        if m_max > source.count:
            raise LapEmbedError(f"m_max={m_max} exceeds the {source.count} available eigenpairs")
        X = source.eigenvectors[:, 1:m_max + 1]
    else:
        X = _as_array(source)
        if m_max > X.shape[1]:
            raise LapEmbedError(f"m_max={m_max} exceeds the {X.shape[1]} available coordinates")
    m_max = int(m_max)
    n = geometry.intrinsic_dim
    m_min = n if m_min is None else int(m_min)
    delta = DELTA_EDGES * geometry.mean_edge_length if delta is None else float(delta)
    diagnostics = []
    m_star = None
    for m in range(max(1, m_min), m_max + 1):
        Xm = X[:, :m]
        t = resolve_tau(tau, Xm, geometry)
        inj = injectivity_scan(Xm, gd, delta, t)
        rank = immersion_rank(Xm, geometry, n, rank_tol)
        row = {
            "m": m,
            "tau": t,
            "min_far_distance": inj.min_distance,
            "colliding_vertices": inj.colliding,
            "vacuous": inj.vacuous,
            "min_rank_ratio": rank.min_ratio,
            "rank_failures": rank.failing,
            "intersecting_faces": None,
        }
        ok = inj.passed and rank.passed
        if m == 3 and check_faces and isinstance(geometry, TriangleMesh):
            hits = self_intersection_check(geometry, Xm)
            row["intersecting_faces"] = int(len(hits))
            ok = ok and len(hits) == 0
        row["passed"] = bool(ok)
        diagnostics.append(row)
        if ok:
            m_star = m
            break
    return EmbedDimReport(m_star, m_max, delta, float(rank_tol), tau, diagnostics)
