"""Correspondence between two shapes through their eigenfunction maps.

Each vertex of shape A is sent to the vertex of B whose spectral image is
nearest. Eigenvectors are only defined up to sign, and up to an orthogonal
change of basis inside a repeated eigenvalue, so B's coordinates are first
aligned: an orthogonal Procrustes block per degenerate group, seeded by a
coarse match on heat-kernel diagonals, and a sign per simple eigenvalue
chosen by searching the correspondence cost.
"""

import csv
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.spatial import cKDTree

from .eigensolver import DEGENERACY_TOL, degenerate_groups, smallest_eigenpairs
from .exceptions import AlignmentError, GeometryError, LapEmbedError
from .laplacian import cotangent_laplacian

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX_M = 14
GREEDY_RESTARTS = 8
SIGN_SEED = 1234
HKS_TIMES = 4
REFINE_ITERS = 10
ANCHOR_CANDIDATES = 12
ANCHOR_MAX_CANDIDATES = 24
SCREEN_POINTS = 512
SCREEN_KEEP = 4


@dataclass(frozen=True)
class Correspondence:
    """Vertex map from A to B with the alignment that produced it.

    ``cost`` is ``sum_x min_x' |Phi_B(x') R - Phi_A(x)|^2`` where ``R`` is
    ``transform``, the block-diagonal product of group rotations and column
    signs applied to B's coordinates.
    """

    map: np.ndarray
    cost: float
    signs: np.ndarray
    transform: np.ndarray
    blocks: tuple = ()
    candidates: int = 1
    mode: str = "none"
    info: dict = field(default_factory=dict)

    def accuracy(self, truth):
        """Fraction of A vertices sent to ``truth``."""
        return float(np.mean(self.map == np.asarray(truth)))

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["source", "target"])
            w.writerows(zip(range(len(self.map)), self.map.tolist()))


def _coords(x, m):
    if hasattr(x, "eigenvectors"):
        if m > x.count:
            raise LapEmbedError(f"m={m} exceeds the {x.count} available eigenpairs")
        return np.asarray(x.eigenvectors[:, 1:m + 1])
    X = np.asarray(getattr(x, "coords", x), dtype=float)
    if X.ndim != 2:
        raise LapEmbedError("coordinates must be a 2-D array")
    if m is not None:
        if m > X.shape[1]:
            raise LapEmbedError(f"m={m} exceeds the {X.shape[1]} available coordinates")
        X = X[:, :m]
    return X


def nearest(XA, XB):
    """Nearest B row for every A row; exact ties go to the lowest B index.

    Returns ``(index, squared_distance)``.
    """
    tree = cKDTree(XB)
    n = len(XB)
    k = min(4, n)
    dist, idx = tree.query(XA, k=k)
    dist = dist.reshape(len(XA), k)
    idx = idx.reshape(len(XA), k)
    tied = dist == dist[:, :1]
    best = np.where(tied, idx, n).min(axis=1)
    # rows where every returned neighbour ties may hide lower indices further out
    open_rows = np.nonzero(tied.all(axis=1))[0] if k < n else np.array([], dtype=int)
    for r in open_rows:
        cand = tree.query_ball_point(XA[r], dist[r, 0] * (1 + 1e-15) + 1e-300)
        cd = np.linalg.norm(XB[cand] - XA[r], axis=1)
        cand = np.asarray(cand)[cd == cd.min()]
        best[r] = cand.min()
    d2 = np.sum((XB[best] - XA) ** 2, axis=1)
    return best, d2


def match_closest(coordsA, coordsB, m=None):
    """Nearest-neighbour correspondence without any alignment."""
    XA, XB = _coords(coordsA, m), _coords(coordsB, m)
    if XA.shape[1] != XB.shape[1]:
        raise LapEmbedError(f"dimension mismatch: {XA.shape[1]} vs {XB.shape[1]}")
    idx, d2 = nearest(XA, XB)
    k = XA.shape[1]
    return Correspondence(idx, float(d2.sum()), np.ones(k), np.eye(k), (), 1, "none")


def _cost(XA, XB):
    idx, d2 = nearest(XA, XB)
    return float(d2.sum()), idx


def _signs_to_transform(signs, base):
    return base * signs[None, :]


def sign_search(specA, specB, m, mode="exhaustive", columns=None, base=None, seed=SIGN_SEED, restarts=GREEDY_RESTARTS):
    """Search sign flips of B's columns for the cheapest correspondence.

    Parameters
    ----------
    specA, specB : Spectrum, EmbeddingCoords or ndarray
    m : int
    mode : {"exhaustive", "greedy"}
        Exhaustive tries all ``2^k`` sign vectors over the searched columns
        (``k <= 14``). Greedy applies the best single flip until none helps,
        from the all-positive start and from ``restarts`` seeded random starts.
    columns : sequence of int, optional
        Columns whose sign is searched; others stay positive. Default all.
    base : ndarray, shape (m, m), optional
        Transform applied to B before the signs (e.g. group rotations).

    Returns
    -------
    signs : ndarray of +-1, shape (m,)
    Correspondence
    """
    XA, XB = _coords(specA, m), _coords(specB, m)
    m = XA.shape[1]
    if XB.shape[1] != m:
        raise LapEmbedError(f"dimension mismatch: {m} vs {XB.shape[1]}")
    cols = np.arange(m) if columns is None else np.asarray(columns, dtype=int)
    base = np.eye(m) if base is None else np.asarray(base, dtype=float)
    XBb = XB @ base
    k = len(cols)

    def evaluate(sub):
        s = np.ones(m)
        s[cols] = sub
        c, idx = _cost(XA, XBb * s)
        return c, idx, s

    if mode == "exhaustive":
        if k > EXHAUSTIVE_MAX_M:
            raise LapEmbedError(f"exhaustive sign search limited to {EXHAUSTIVE_MAX_M} columns, got {k}")
        best = None
        n_eval = 0
        for sub in itertools.product((1.0, -1.0), repeat=k):
            c, idx, s = evaluate(np.array(sub))
            n_eval += 1
            if best is None or c < best[0]:
                best = (c, idx, s)
    elif mode == "greedy":
        rng = np.random.default_rng(seed)
        starts = [np.ones(k)] + [rng.choice([1.0, -1.0], size=k) for _ in range(restarts)]
        best = None
        n_eval = 0
        for sub in starts:
            cur = evaluate(sub)
            n_eval += 1
            while k:
                trials = []
                for i in range(k):
                    flip = cur[2][cols].copy()
                    flip[i] = -flip[i]
                    trials.append(evaluate(flip))
                    n_eval += 1
                top = min(trials, key=lambda t: t[0])
                if top[0] < cur[0]:
                    cur = top
                else:
                    break
            if best is None or cur[0] < best[0]:
                best = cur
    else:
        raise LapEmbedError(f"unknown sign search mode {mode!r}")
    c, idx, s = best
    corr = Correspondence(idx, c, s, _signs_to_transform(s, base), (), n_eval, mode)
    return s, corr


def matched_groups(specA, specB, m, degeneracy_tol=DEGENERACY_TOL):
    """Degenerate groups among eigenpairs ``1..m`` common to both spectra.

    Raises
    ------
    AlignmentError
        If the group structures differ or ``m`` cuts through a group.
    """
    m = int(m)
    for s in (specA, specB):
        if m > s.count:
            raise LapEmbedError(f"m={m} exceeds the {s.count} available eigenpairs")
    ga = degenerate_groups(specA.eigenvalues, degeneracy_tol, 1)
    gb = degenerate_groups(specB.eigenvalues, degeneracy_tol, 1)
    ga = [g for g in ga if g.start <= m]
    gb = [g for g in gb if g.start <= m]
    if [len(g) for g in ga] != [len(g) for g in gb] or [g.start for g in ga] != [g.start for g in gb]:
        raise AlignmentError(
            f"degenerate group sizes differ: {[len(g) for g in ga]} vs {[len(g) for g in gb]}"
        )
    if ga and ga[-1].stop - 1 > m:
        g = ga[-1]
        raise AlignmentError(f"m={m} splits the degenerate group {g.start}..{g.stop - 1}")
    return [range(g.start - 1, g.stop - 1) for g in ga]


def heat_signatures(spec, n_times=HKS_TIMES, stop=None):
    """Heat-kernel diagonals at ``n_times`` log-spaced times.

    Uses modes ``1..stop-1``; both the sign and any rotation inside a complete
    degenerate group leave these values unchanged.
    """
    stop = spec.count + 1 if stop is None else stop
    lam = spec.eigenvalues[1:stop]
    if not lam[0] > 0:
        raise LapEmbedError("heat signatures need lambda_1 > 0")
    t = np.geomspace(0.5 / lam[-1], 2.0 / lam[0], n_times)
    phi2 = spec.eigenvectors[:, 1:stop] ** 2
    return phi2 @ np.exp(-np.outer(lam, t))


def _complete_stop(spec, degeneracy_tol):
    groups = degenerate_groups(spec.eigenvalues, degeneracy_tol, 1)
    # the last group may continue beyond the computed pairs
    if len(groups) > 1:
        return groups[-1].start
    return spec.count + 1


def hks_prematch(specA, specB, degeneracy_tol=DEGENERACY_TOL, n_times=HKS_TIMES):
    """Coarse A -> B vertex match on heat-kernel diagonals."""
    ha, hb = _standard_signatures(specA, specB, degeneracy_tol, n_times)
    idx, _ = nearest(ha, hb)
    return idx


@dataclass(frozen=True)
class GroupAlignment:
    """Orthogonal blocks for B's coordinates; ``transform`` is block diagonal."""

    groups: tuple
    blocks: tuple
    transform: np.ndarray

    @property
    def singletons(self):
        return [g.start for g in self.groups if len(g) == 1]


def _procrustes_blocks(XA, XBm, groups):
    R = np.eye(XA.shape[1])
    blocks = []
    for g in groups:
        if len(g) == 1:
            blocks.append(np.eye(1))
            continue
        sl = slice(g.start, g.stop)
        Q, _ = orthogonal_procrustes(XBm[:, sl], XA[:, sl])
        R[sl, sl] = Q
        blocks.append(Q)
    return R, blocks


def _standard_signatures(specA, specB, degeneracy_tol, n_times=HKS_TIMES):
    """Heat signatures over complete groups, both scaled by A's spread."""
    stop = min(_complete_stop(specA, degeneracy_tol), _complete_stop(specB, degeneracy_tol))
    ha = heat_signatures(specA, n_times, stop)
    hb = heat_signatures(specB, n_times, stop)
    scale = ha.std(axis=0)
    scale[scale == 0] = 1.0
    return ha / scale, hb / scale


def _anchor_hypotheses(YA, YB, ha, hb):
    """Candidate blocks from heat-signature anchors, for groups of size <= 3.

    A vertices whose signature has the fewest near-ties among B's are used
    as ``k - 1`` anchors; every pairing with their closest B signatures
    fixes the block up to one reflection, and both are returned.
    """
    k = YA.shape[1]
    n_b = len(hb)
    tree = cKDTree(hb)
    kk = min(n_b, ANCHOR_MAX_CANDIDATES + 1)
    dist, idx = tree.query(ha, k=kk)
    dist, idx = dist.reshape(len(ha), kk), idx.reshape(len(ha), kk)
    ties = np.sum(dist <= dist[:, :1] + 1e-6, axis=1)
    rare = np.nonzero(ties == ties.min())[0]
    anchors = [int(rare[np.argmax(np.linalg.norm(YA[rare], axis=1))])]
    for _ in range(k - 2):
        # next anchor: the rare vertex farthest from the span of the previous ones
        basis, _ = np.linalg.qr(YA[anchors].T)
        resid = YA[rare] - (YA[rare] @ basis) @ basis.T
        anchors.append(int(rare[np.argmax(np.linalg.norm(resid, axis=1))]))
    n_c = int(min(max(ANCHOR_CANDIDATES, ties.min()), ANCHOR_MAX_CANDIDATES, n_b))
    P = YA[anchors]
    normal = np.linalg.svd(P, full_matrices=True)[2][-1]
    H = np.eye(k) - 2 * np.outer(normal, normal)
    out = []
    for combo in itertools.product(*[idx[a, :n_c] for a in anchors]):
        if len(set(combo)) < len(combo):
            continue
        Q, _ = orthogonal_procrustes(YB[list(combo)], P)
        out += [Q, Q @ H]
    return out


def align_degenerate_groups(specA, specB, m, degeneracy_tol=DEGENERACY_TOL, prematch=None, refine_iters=REFINE_ITERS):
    """Orthogonal Procrustes alignment of each repeated-eigenvalue block.

    Groups are aligned in order. A block is fitted to the current vertex
    match (initially ``prematch``, default the heat-signature match; later
    the closest-point match on the groups already aligned) and refined by
    closest-point iterations. Heat signatures cannot tell symmetric vertices
    apart, so for groups of size 2 or 3 the block is also fitted to anchor
    pairings of rare signatures, keeping the cheapest result. Candidates are
    scored on all grouped columns aligned so far. Singleton groups get the
    identity; their signs are left to :func:`sign_search`.
    """
    groups = matched_groups(specA, specB, m, degeneracy_tol)
    XA, XB = _coords(specA, m), _coords(specB, m)
    ha = hb = None
    if prematch is None:
        ha, hb = _standard_signatures(specA, specB, degeneracy_tol)
        prematch, _ = nearest(ha, hb)
    R = np.eye(XA.shape[1])
    blocks = [np.eye(1) for _ in groups]
    match = prematch
    done = []
    tiny = 1e-20 * len(XA)
    for gi, g in enumerate(groups):
        if len(g) == 1:
            continue
        sl = list(g)
        cols = done + sl
        YA, YB = XA[:, sl], XB[:, sl]

        def score(Q):
            R[np.ix_(sl, sl)] = Q
            return _icp_joint(XA, XB, R, groups[:gi + 1], cols, refine_iters)

        Q0, _ = orthogonal_procrustes(YB[match], YA)
        best = score(Q0)
        if best[1] > tiny and len(g) <= 3 and refine_iters:
            if ha is None:
                ha, hb = _standard_signatures(specA, specB, degeneracy_tol)
            for Q in _screen(YA, YB, _anchor_hypotheses(YA, YB, ha, hb)):
                cand = score(Q)
                if cand[1] < best[1]:
                    best = cand
                if best[1] <= tiny:
                    break
        R = best[0]
        match = best[2]
        done = cols
    blocks = [R[g.start:g.stop, g.start:g.stop].copy() for g in groups]
    return GroupAlignment(tuple(groups), tuple(blocks), R)


def _screen(YA, YB, hypotheses, keep=SCREEN_KEEP):
    """Cheapest hypotheses by closest-point cost on a vertex subsample.

    ``|YB Q - YA| = |YB - YA Q^T|`` for orthogonal ``Q``, so one tree on B
    serves every hypothesis.
    """
    if not hypotheses:
        return []
    tree = cKDTree(YB)
    sub = YA[np.linspace(0, len(YA) - 1, min(len(YA), SCREEN_POINTS)).astype(int)]
    costs = [float(np.sum(tree.query(sub @ Q.T)[0] ** 2)) for Q in hypotheses]
    order = np.argsort(costs, kind="stable")[:keep]
    return [hypotheses[i] for i in order]


def _icp_joint(XA, XB, R, groups, cols, iters):
    """Refit the grouped blocks to the closest-point match on ``cols``."""
    R = R.copy()
    cost, idx = _cost(XA[:, cols], (XB @ R)[:, cols])
    for _ in range(iters):
        R2, _ = _procrustes_blocks(XA, XB[idx], groups)
        # blocks of groups not yet aligned stay as they are
        keep = [j for j in range(R.shape[0]) if j not in cols]
        R2[np.ix_(keep, keep)] = R[np.ix_(keep, keep)]
        c2, idx2 = _cost(XA[:, cols], (XB @ R2)[:, cols])
        if not c2 < cost:
            break
        R, cost, idx = R2, c2, idx2
    return R, cost, idx


def register(specA, specB, m, mode="exhaustive", degeneracy_tol=DEGENERACY_TOL, seed=SIGN_SEED, refine_iters=REFINE_ITERS):
    """Aligned closest-point correspondence from A to B.

    Group rotations come from :func:`align_degenerate_groups`, signs of
    simple eigenvectors from :func:`sign_search`. The rotations are then
    re-fitted to the current correspondence until the cost stops dropping.
    """
    align = align_degenerate_groups(specA, specB, m, degeneracy_tol)
    XA, XB = _coords(specA, m), _coords(specB, m)
    singles = align.singletons
    signs, corr = sign_search(XA, XB, m, mode, columns=singles, base=align.transform, seed=seed)
    best = corr
    if len(singles) < m:
        for _ in range(refine_iters):
            R, _ = _procrustes_blocks(XA, XB[best.map], align.groups)
            T = R * signs[None, :]
            c, idx = _cost(XA, XB @ T)
            if not c < best.cost:
                break
            best = Correspondence(idx, c, signs, T, (), best.candidates, mode)
    blocks = tuple(best.transform[g.start:g.stop, g.start:g.stop] for g in align.groups)
    return Correspondence(best.map, best.cost, best.signs, best.transform, blocks, best.candidates, mode, {"groups": [len(g) for g in align.groups]})


def smooth_field(points, seed, n_waves=6):
    """Random smooth vector field with unit maximum norm over ``points``."""
    rng = np.random.default_rng(seed)
    P = np.asarray(points, dtype=float)
    span = np.ptp(P, axis=0).max()
    freq = rng.standard_normal((n_waves, P.shape[1])) * (2 * np.pi / span)
    phase = rng.uniform(0, 2 * np.pi, n_waves)
    amp = rng.standard_normal((n_waves, P.shape[1]))
    V = np.sin(P @ freq.T + phase) @ amp
    return V / np.linalg.norm(V, axis=1).max()


def perturb_mesh(mesh, epsilon, seed=0):
    """Mesh displaced by ``epsilon * mean_edge_length`` times a smooth field.

    Raises
    ------
    GeometryError
        If a face degenerates or flips orientation.
    """
    epsilon = float(epsilon)
    if epsilon == 0:
        return mesh
    V = mesh.vertices + epsilon * mesh.mean_edge_length * smooth_field(mesh.vertices, seed)
    new = mesh.with_vertices(V)
    f = mesh.faces

    def normals(X):
        return np.cross(X[f[:, 1]] - X[f[:, 0]], X[f[:, 2]] - X[f[:, 0]])

    if np.any(np.einsum("ij,ij->i", normals(mesh.vertices), normals(V)) <= 0):
        raise GeometryError(f"perturbation epsilon={epsilon} flips or collapses a face")
    return new


@dataclass(frozen=True)
class StabilityResult:
    """Per-epsilon statistics of :func:`stability_probe`.

    ``displacement[i]`` is ``max_x |Phi'(x) R - Phi(x)|`` for the aligned
    perturbed map; ``match_rate[i]`` is the share of vertices the aligned
    closest-point match sends back to themselves.
    """

    epsilons: np.ndarray
    displacement: np.ndarray
    match_rate: np.ndarray
    m: int

    def is_decreasing(self, inversion_tol=0.10, max_inversions=1):
        """Nonincreasing as epsilon shrinks, up to small inversions."""
        order = np.argsort(-self.epsilons)
        d = self.displacement[order]
        ups = d[1:] > d[:-1]
        if not ups.any():
            return True
        rel = (d[1:] - d[:-1])[ups] / np.maximum(d[:-1][ups], 1e-300)
        return int(ups.sum()) <= max_inversions and bool(np.all(rel <= inversion_tol))


def stability_probe(mesh, epsilons, m, count=None, degeneracy_tol=DEGENERACY_TOL, seed=0):
    """Spectral-image displacement under smooth vertex perturbations.

    The reference groups decide which columns are aligned jointly; since the
    vertex correspondence of a perturbed mesh is the identity, the Procrustes
    blocks and signs are fitted against it directly.
    """
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps < 0) or np.any(eps > 0.3):
        raise LapEmbedError("epsilon values must lie in [0, 0.3]")
    m = int(m)
    count = m + 4 if count is None else int(count)
    ref = smallest_eigenpairs(cotangent_laplacian(mesh), count)
    groups = degenerate_groups(ref.eigenvalues, degeneracy_tol, 1)
    groups = [range(g.start - 1, g.stop - 1) for g in groups if g.start <= m]
    if groups[-1].stop > m:
        raise AlignmentError(f"m={m} splits a degenerate group of the reference")
    XA = ref.eigenvectors[:, 1:m + 1]
    disp, rate = [], []
    for e in eps:
        pert = perturb_mesh(mesh, e, seed=seed)
        sp = ref if e == 0 else smallest_eigenpairs(cotangent_laplacian(pert), count)
        XB = sp.eigenvectors[:, 1:m + 1]
        R, _ = _procrustes_blocks(XA, XB, groups)
        # singleton columns: sign of the correlation
        for g in groups:
            if len(g) == 1:
                j = g.start
                R[j, j] = 1.0 if XA[:, j] @ XB[:, j] >= 0 else -1.0
        Y = XB @ R
        disp.append(float(np.linalg.norm(Y - XA, axis=1).max()))
        idx, _ = nearest(XA, Y)
        rate.append(float(np.mean(idx == np.arange(len(XA)))))
    return StabilityResult(eps, np.array(disp), np.array(rate), m)
