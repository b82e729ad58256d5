"""Triangle-triangle intersection with an axis-aligned bounding-volume hierarchy."""

import numpy as np

LEAF_SIZE = 8


def triangles_intersect(P, Q, rel_tol=1e-12):
    """Separating-axis test for batches of triangles.

    Parameters
    ----------
    P, Q : ndarray, shape (K, 3, 3)
        Corner coordinates of K triangle pairs.

    Returns
    -------
    ndarray of bool, shape (K,)
        True where the closed triangles share at least one point. Touching
        counts as intersecting.

    Two convex sets are disjoint iff some axis separates their projections.
    For triangles it suffices to test both normals, the 9 edge-edge cross
    products and the 6 in-plane edge normals (the latter matter only in the
    coplanar case but are harmless otherwise).
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    eP = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 1], P[:, 0] - P[:, 2]], axis=1)
    eQ = np.stack([Q[:, 1] - Q[:, 0], Q[:, 2] - Q[:, 1], Q[:, 0] - Q[:, 2]], axis=1)
    nP = np.cross(eP[:, 0], eP[:, 1])
    nQ = np.cross(eQ[:, 0], eQ[:, 1])
    axes = [nP[:, None], nQ[:, None]]
    axes.append(np.cross(eP[:, :, None, :], eQ[:, None, :, :]).reshape(-1, 9, 3))
    axes.append(np.cross(nP[:, None, :], eP))
    axes.append(np.cross(nQ[:, None, :], eQ))
    axes = np.concatenate(axes, axis=1)  # (K, 17, 3)

    pp = np.einsum("kac,kvc->kav", axes, P)
    qq = np.einsum("kac,kvc->kav", axes, Q)
    scale = np.maximum(np.abs(pp).max(axis=2), np.abs(qq).max(axis=2))
    slack = rel_tol * scale
    sep = (pp.max(axis=2) + slack < qq.min(axis=2)) | (qq.max(axis=2) + slack < pp.min(axis=2))
    return ~sep.any(axis=1)


class AABBTree:
    """Median-split bounding-box hierarchy over triangles."""

    def __init__(self, tris, leaf_size=LEAF_SIZE):
        self.tris = np.asarray(tris, dtype=float)
        lo = self.tris.min(axis=1)
        hi = self.tris.max(axis=1)
        cen = self.tris.mean(axis=1)
        self.lo, self.hi, self.items, self.children = [], [], [], []
        self._build(np.arange(len(self.tris)), lo, hi, cen, leaf_size)

    def _build(self, idx, lo, hi, cen, leaf_size):
        node = len(self.lo)
        self.lo.append(lo[idx].min(axis=0))
        self.hi.append(hi[idx].max(axis=0))
        self.items.append(None)
        self.children.append(None)
        if len(idx) <= leaf_size:
            self.items[node] = idx
            return node
        c = cen[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order = idx[np.argsort(c[:, axis], kind="stable")]
        half = len(order) // 2
        left = self._build(order[:half], lo, hi, cen, leaf_size)
        right = self._build(order[half:], lo, hi, cen, leaf_size)
        self.children[node] = (left, right)
        return node

    def _overlap(self, a, b):
        return bool(np.all(self.lo[a] <= self.hi[b]) and np.all(self.lo[b] <= self.hi[a]))

    def _volume(self, node):
        return float(np.prod(self.hi[node] - self.lo[node]))

    def self_candidate_pairs(self):
        """Triangle index pairs ``(i < j)`` whose leaf boxes overlap."""
        out = []
        stack = [(0, 0)]
        while stack:
            a, b = stack.pop()
            if not self._overlap(a, b):
                continue
            ca, cb = self.children[a], self.children[b]
            if ca is None and cb is None:
                ia, ib = self.items[a], self.items[b]
                if a == b:
                    i, j = np.triu_indices(len(ia), k=1)
                    out.append(np.stack([ia[i], ia[j]], axis=1))
                else:
                    out.append(np.stack(np.meshgrid(ia, ib, indexing="ij"), axis=-1).reshape(-1, 2))
            elif a == b:
                l, r = ca
                stack += [(l, l), (r, r), (l, r)]
            elif ca is None or (cb is not None and self._volume(b) > self._volume(a)):
                stack += [(a, cb[0]), (a, cb[1])]
            else:
                stack += [(ca[0], b), (ca[1], b)]
        if not out:
            return np.empty((0, 2), dtype=np.int64)
        pairs = np.concatenate(out)
        pairs.sort(axis=1)
        return pairs


def _drop_shared_vertex(faces, pairs):
    f1 = faces[pairs[:, 0]]
    f2 = faces[pairs[:, 1]]
    shared = (f1[:, :, None] == f2[:, None, :]).any(axis=(1, 2))
    return pairs[~shared]


def self_intersections(vertices, faces, leaf_size=LEAF_SIZE):
    """Pairs of faces (not sharing a vertex) whose triangles intersect."""
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    if len(faces) < 2:
        return np.empty((0, 2), dtype=np.int64)
    tris = vertices[faces]
    pairs = AABBTree(tris, leaf_size).self_candidate_pairs()
    pairs = _drop_shared_vertex(faces, pairs)
    if len(pairs) == 0:
        return pairs
    hit = np.zeros(len(pairs), dtype=bool)
    for s in range(0, len(pairs), 1 << 15):
        p = pairs[s:s + (1 << 15)]
        hit[s:s + (1 << 15)] = triangles_intersect(tris[p[:, 0]], tris[p[:, 1]])
    res = pairs[hit]
    return res[np.lexsort((res[:, 1], res[:, 0]))]


def self_intersections_bruteforce(vertices, faces):
    """All-pairs reference for :func:`self_intersections`."""
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    i, j = np.triu_indices(len(faces), k=1)
    pairs = _drop_shared_vertex(faces, np.stack([i, j], axis=1))
    tris = vertices[faces]
    hit = np.zeros(len(pairs), dtype=bool)
    for s in range(0, len(pairs), 1 << 15):
        p = pairs[s:s + (1 << 15)]
        hit[s:s + (1 << 15)] = triangles_intersect(tris[p[:, 0]], tris[p[:, 1]])
    return pairs[hit]
