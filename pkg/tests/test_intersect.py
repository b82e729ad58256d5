import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lapembed.geometry import TriangleMesh, icosphere
from lapembed.intersect import AABBTree, self_intersections, self_intersections_bruteforce, triangles_intersect


def segment_hits(a, b, T, margin):
    """Segment ab meets triangle T; returns (hit, distance from the decision boundary)."""
    e1, e2 = T[1] - T[0], T[2] - T[0]
    d = b - a
    h = np.cross(d, e2)
    det = e1 @ h
    if abs(det) < 1e-12:
        return False, 0.0
    s = a - T[0]
    u = (s @ h) / det
    q = np.cross(s, e1)
    v = (d @ q) / det
    t = (e2 @ q) / det
    slack = min(abs(u), abs(v), abs(1 - u - v), abs(t), abs(1 - t))
    return (u >= 0 and v >= 0 and u + v <= 1 and 0 <= t <= 1), slack


def oracle(P, Q):
    """Non-coplanar triangles meet iff an edge of one crosses the other."""
    hit, slack = False, np.inf
    for A, B in ((P, Q), (Q, P)):
        for k in range(3):
            h, s = segment_hits(A[k], A[(k + 1) % 3], B, 0)
            hit |= h
            slack = min(slack, s)
    return hit, slack


def test_random_pairs_against_segment_oracle():
    rng = np.random.default_rng(0)
    P = rng.uniform(-1, 1, (4000, 3, 3))
    Q = rng.uniform(-1, 1, (4000, 3, 3)) + rng.uniform(-0.8, 0.8, (4000, 1, 3))
    got = triangles_intersect(P, Q)
    checked = hits = 0
    for k in range(len(P)):
        want, slack = oracle(P[k], Q[k])
        if slack < 1e-7:
            continue
        assert got[k] == want, k
        checked += 1
        hits += want
    assert checked > 3500 and 200 < hits < checked - 200


coord = st.floats(-2, 2, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(st.lists(coord, min_size=18, max_size=18))
def test_hypothesis_against_oracle(xs):
    P = np.array(xs[:9]).reshape(3, 3)
    Q = np.array(xs[9:]).reshape(3, 3)
    for T in (P, Q):
        assume(np.linalg.norm(np.cross(T[1] - T[0], T[2] - T[0])) > 1e-3)
    want, slack = oracle(P, Q)
    assume(slack > 1e-6)
    assert triangles_intersect(P[None], Q[None])[0] == want


def test_symmetric_in_arguments():
    rng = np.random.default_rng(1)
    P, Q = rng.uniform(-1, 1, (2, 500, 3, 3))
    assert np.array_equal(triangles_intersect(P, Q), triangles_intersect(Q, P))


def test_coplanar_cases():
    T = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    inside = T * 0.2 + [0.1, 0.1, 0]
    apart = T + [2, 0, 0]
    touching = T + [1, 0, 0]
    res = triangles_intersect(np.stack([T, T, T]), np.stack([inside, apart, touching]))
    assert res.tolist() == [True, False, True]


def test_tree_candidates_superset():
    rng = np.random.default_rng(2)
    tris = rng.uniform(0, 1, (300, 3, 3)) * 0.1 + rng.uniform(0, 1, (300, 1, 3))
    pairs = {tuple(p) for p in AABBTree(tris, 4).self_candidate_pairs()}
    lo, hi = tris.min(axis=1), tris.max(axis=1)
    for i in range(300):
        for j in range(i + 1, 300):
            if np.all(lo[i] <= hi[j]) and np.all(lo[j] <= hi[i]):
                assert (i, j) in pairs


def test_clean_sphere_has_none(ico3):
    assert len(self_intersections(ico3.vertices, ico3.faces)) == 0


def crossing_pair():
    """Two overlapping spheres stored as one mesh."""
    s = icosphere(2)
    V = np.vstack([s.vertices, s.vertices * 0.9 + [1.0, 0.2, 0.1]])
    F = np.vstack([s.faces, s.faces + s.n_vertices])
    return TriangleMesh(V, F, check_connected=False)


def test_crossing_mesh_matches_bruteforce():
    mesh = crossing_pair()
    fast = self_intersections(mesh.vertices, mesh.faces)
    slow = self_intersections_bruteforce(mesh.vertices, mesh.faces)
    assert len(fast) > 0
    assert {tuple(p) for p in fast} == {tuple(p) for p in slow}
    # every reported pair mixes the two spheres
    half = mesh.n_faces // 2
    assert np.all((fast[:, 0] < half) & (fast[:, 1] >= half))


@pytest.mark.parametrize("seed", range(4))
def test_crumpled_meshes_match_bruteforce(seed):
    s = icosphere(2)
    rng = np.random.default_rng(seed)
    V = s.vertices + rng.normal(scale=0.25, size=s.vertices.shape)
    fast = self_intersections(V, s.faces, leaf_size=3)
    slow = self_intersections_bruteforce(V, s.faces)
    assert {tuple(p) for p in fast} == {tuple(p) for p in slow}
    assert len(slow) > 0


def test_adjacent_faces_ignored():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.2, 0.2, 0]], dtype=float)
    # the second face folds back over the first
    assert len(self_intersections(V, [[0, 1, 2], [0, 1, 3]])) == 0
