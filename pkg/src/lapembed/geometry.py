"""Discrete geometry carriers, file readers/writers and graph distances.

Meshes and point clouds are immutable once built: their arrays are marked
read-only and derived quantities are cached.
"""

import csv
import logging
import math
import re
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .exceptions import (
    DisconnectedError,
    DuplicatePointError,
    GeometryError,
    ParseError,
    UnreachableError,
)

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"
DUPLICATE_TOL = 1e-12
DEFAULT_KNN = 8


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _check_connected(n, rows, cols):
    adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, labels = csgraph.connected_components(adj, directed=False)
    if n_comp > 1:
        raise DisconnectedError(np.bincount(labels))


class TriangleMesh:
    """Triangle mesh with derived edge structure.

    Parameters
    ----------
    vertices : array_like, shape (N, 3)
    faces : array_like of int, shape (F, 3)
    check_connected : bool
        Reject meshes with more than one connected component. Images of a
        mesh under a spectral map reuse the connectivity and may skip it.
    metadata : dict, optional
        Free-form header information from the file (e.g. ``genus``).
    """

    def __init__(self, vertices, faces, check_connected=True, metadata=None):
        vertices = np.asarray(vertices, dtype=float)
        faces = np.asarray(faces)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise GeometryError(f"vertices must have shape (N, 3), got {vertices.shape}")
        if faces.size == 0:
            faces = faces.reshape(0, 3)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise GeometryError(f"faces must have shape (F, 3), got {faces.shape}")
        if not np.all(np.isfinite(vertices)):
            raise GeometryError("vertex coordinates must be finite")
        if faces.size and not np.issubdtype(faces.dtype, np.integer):
            if not np.all(faces == np.round(faces)):
                raise GeometryError("face indices must be integers")
        faces = faces.astype(np.int64)
        n = len(vertices)
        if faces.size:
            bad = np.flatnonzero((faces < 0).any(axis=1) | (faces >= n).any(axis=1))
            if bad.size:
                raise GeometryError(
                    f"face {bad[0]} has vertex index out of range [0, {n}): {faces[bad[0]].tolist()}"
                )
            degen = np.flatnonzero(
                (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
            )
            if degen.size:
                raise GeometryError(f"degenerate face {degen[0]} repeats a vertex: {faces[degen[0]].tolist()}")
        self.vertices = _frozen(vertices, float)
        self.faces = _frozen(faces, np.int64)
        self.metadata = dict(metadata or {})
        if check_connected:
            # isolated vertices count as components of their own
            e = self.edges
            _check_connected(n, e[:, 0], e[:, 1])

    def __repr__(self):
        return f"TriangleMesh(n_vertices={self.n_vertices}, n_faces={self.n_faces})"

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def intrinsic_dim(self):
        return 2

    @cached_property
    def edges(self):
        """Unique undirected edges as sorted pairs, shape (E, 2)."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        e = np.unique(e, axis=0)
        e.setflags(write=False)
        return e

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def edge_lengths(self):
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    @property
    def mean_edge_length(self):
        return float(self.edge_lengths.mean())

    @cached_property
    def face_areas(self):
        v = self.vertices
        f = self.faces
        return 0.5 * np.linalg.norm(np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]), axis=1)

    @property
    def area(self):
        return float(self.face_areas.sum())

    @cached_property
    def adjacency(self):
        """Symmetric CSR matrix of edge lengths."""
        e = self.edges
        n = self.n_vertices
        w = self.edge_lengths
        a = sparse.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(n, n),
        )
        return a.tocsr()

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def local_offsets(self, i, nbrs):
        return self.vertices[nbrs] - self.vertices[i]

    @cached_property
    def is_consistently_oriented(self):
        """True when every directed edge is used by at most one face."""
        f = self.faces
        d = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        _, counts = np.unique(d, axis=0, return_counts=True)
        return bool(np.all(counts == 1))

    def with_vertices(self, vertices, check_connected=False):
        """Same connectivity, new positions (e.g. a perturbed copy or a spectral image)."""
        return TriangleMesh(vertices, self.faces, check_connected=check_connected, metadata=self.metadata)


class PointCloud:
    """Sample of a manifold of declared intrinsic dimension.

    Parameters
    ----------
    points : array_like, shape (N, D)
    intrinsic_dim : int
    n_neighbors : int
        ``k`` for the symmetrized k-NN graph used by distances and Laplacians.
    """

    def __init__(self, points, intrinsic_dim, n_neighbors=DEFAULT_KNN):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise GeometryError("point cloud must be a non-empty 2-D array")
        if not np.all(np.isfinite(points)):
            raise GeometryError("point coordinates must be finite")
        intrinsic_dim = int(intrinsic_dim)
        if intrinsic_dim < 1:
            raise GeometryError("intrinsic_dim must be a positive integer")
        if len(points) < intrinsic_dim + 2:
            raise GeometryError(
                f"need at least intrinsic_dim + 2 = {intrinsic_dim + 2} points, got {len(points)}"
            )
        pairs = cKDTree(points).query_pairs(DUPLICATE_TOL, output_type="ndarray")
        if len(pairs):
            raise DuplicatePointError(pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))])
        self.points = _frozen(points, float)
        self.intrinsic_dim = intrinsic_dim
        self.n_neighbors = int(n_neighbors)

    def __repr__(self):
        return f"PointCloud(n_points={self.n_vertices}, ambient_dim={self.points.shape[1]}, intrinsic_dim={self.intrinsic_dim})"

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def vertices(self):
        return self.points

    def knn_edges(self, k=None):
        """Union-symmetrized directed k-NN edges ``(edges, lengths)``."""
        k = self.n_neighbors if k is None else int(k)
        n = self.n_vertices
        if k < 1:
            raise GeometryError("k must be at least 1")
        if k > n - 1:
            raise GeometryError(f"k={k} exceeds N-1={n - 1}")
        dist, idx = cKDTree(self.points).query(self.points, k=k + 1)
        # column 0 is the point itself (no duplicates exist)
        rows = np.repeat(np.arange(n), k)
        cols = idx[:, 1:].ravel()
        e = np.stack([rows, cols], axis=1)
        e.sort(axis=1)
        e = np.unique(e, axis=0)
        lengths = np.linalg.norm(self.points[e[:, 0]] - self.points[e[:, 1]], axis=1)
        return e, lengths

    @cached_property
    def edges(self):
        return self.knn_edges()[0]

    @cached_property
    def edge_lengths(self):
        e = self.edges
        return np.linalg.norm(self.points[e[:, 0]] - self.points[e[:, 1]], axis=1)

    @property
    def mean_edge_length(self):
        return float(self.edge_lengths.mean())

    @cached_property
    def adjacency(self):
        e = self.edges
        n = self.n_vertices
        w = self.edge_lengths
        a = sparse.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(n, n),
        )
        return a.tocsr()

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def local_offsets(self, i, nbrs):
        return self.points[nbrs] - self.points[i]


class GraphDistances:
    """Shortest-path distances from a set of sources.

    ``distances[s, v]`` is the distance from ``sources[s]`` to vertex ``v``.
    When the sources are all vertices the matrix is exactly symmetric.
    """

    def __init__(self, sources, distances, graph=None):
        self.sources = _frozen(sources, np.int64)
        self.distances = _frozen(distances, float)
        self._graph = graph
        self._row = {int(s): r for r, s in enumerate(self.sources)}
        self._extra = {}

    @property
    def n_vertices(self):
        return self.distances.shape[1]

    @property
    def is_complete(self):
        return len(self.sources) == self.n_vertices and np.array_equal(self.sources, np.arange(self.n_vertices))

    def row(self, i):
        i = int(i)
        if i in self._row:
            return self.distances[self._row[i]]
        if self._graph is None:
            raise KeyError(f"vertex {i} is not a source")
        if i not in self._extra:
            self._extra[i] = csgraph.dijkstra(self._graph, directed=False, indices=i)
        return self._extra[i]

    def between(self, i, j):
        """Vectorised distance lookup for index arrays ``i`` and ``j``."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if self.is_complete:
            return self.distances[i, j]
        out = np.empty(np.broadcast(i, j).shape)
        ib, jb = np.broadcast_arrays(i, j)
        for s in np.unique(ib):
            sel = ib == s
            out[sel] = self.row(s)[jb[sel]]
        return out

    def max(self):
        return float(self.distances.max())


def graph_distance(geometry, source_indices=None):
    """Dijkstra distances over the geometry's edge graph.

    Parameters
    ----------
    geometry : TriangleMesh or PointCloud
        Mesh edges or the symmetrized k-NN graph of a cloud, weighted by
        Euclidean edge length.
    source_indices : array_like of int, optional
        Defaults to every vertex.
    """
    graph = geometry.adjacency
    n = geometry.n_vertices
    if source_indices is None:
        sources = np.arange(n)
    else:
        sources = np.atleast_1d(np.asarray(source_indices, dtype=np.int64))
        if sources.size and (sources.min() < 0 or sources.max() >= n):
            raise GeometryError("source index out of range")
    d = csgraph.dijkstra(graph, directed=False, indices=sources)
    d = np.atleast_2d(d)
    if not np.all(np.isfinite(d)):
        s, v = np.argwhere(~np.isfinite(d))[0]
        raise UnreachableError(f"vertex {v} is unreachable from source {sources[s]}")
    if len(sources) == n and np.array_equal(sources, np.arange(n)):
        # both triangles of rounding are true path lengths; pick one deterministically
        d = np.minimum(d, d.T)
    return GraphDistances(sources, d, graph=graph)


# ---------------------------------------------------------------------------
# file formats


def _data_lines(text):
    """Yield ``(lineno, tokens)`` skipping blanks and ``#`` comments."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if s:
            yield lineno, s.split()


def _parse_comments(text):
    meta = {}
    for line in text.splitlines():
        m = re.match(r"\s*#\s*genus\s*[:=]?\s*(-?\d+)\s*$", line, re.IGNORECASE)
        if m:
            meta["genus"] = int(m.group(1))
    return meta


def _triangulate(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def read_off(path):
    """Read an OFF file into ``(vertices, faces, metadata)`` without validation."""
    path = Path(path)
    text = path.read_text()
    lines = _data_lines(text)
    try:
        lineno, tok = next(lines)
    except StopIteration:
        raise ParseError("empty file", path=path) from None
    if tok[0] != "OFF":
        if tok[0].startswith("OFF"):
            raise ParseError(f"unsupported OFF variant {tok[0]!r}", line=lineno, path=path)
        raise ParseError("missing OFF header", line=lineno, path=path)
    tok = tok[1:]
    if not tok:
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError("missing element counts", path=path) from None
    try:
        nv, nf = int(tok[0]), int(tok[1])
    except (ValueError, IndexError):
        raise ParseError("bad element counts", line=lineno, path=path) from None
    verts = []
    for _ in range(nv):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError(f"expected {nv} vertices, file ended after {len(verts)}", path=path) from None
        try:
            verts.append([float(x) for x in tok[:3]])
        except ValueError:
            raise ParseError(f"bad vertex coordinates {tok}", line=lineno, path=path) from None
        if len(tok) < 3:
            raise ParseError("vertex needs 3 coordinates", line=lineno, path=path)
    faces = []
    for _ in range(nf):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError(f"expected {nf} faces, file ended after {len(faces)}", path=path) from None
        try:
            k = int(tok[0])
            idx = [int(x) for x in tok[1:k + 1]]
        except ValueError:
            raise ParseError(f"bad face {tok}", line=lineno, path=path) from None
        if k < 3 or len(idx) != k:
            raise ParseError(f"face declares {k} vertices but lists {len(idx)}", line=lineno, path=path)
        bad = [i for i in idx if i < 0 or i >= nv]
        if bad:
            raise ParseError(f"face index {bad[0]} out of range for {nv} vertices", line=lineno, path=path)
        faces.extend(_triangulate(idx))
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3), _parse_comments(text)


def write_off(path, vertices, faces, comments=()):
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    out = ["OFF"]
    out.extend(f"# {c}" for c in comments)
    out.append(f"{len(vertices)} {len(faces)} 0")
    out.extend(" ".join(FLOAT_FMT % x for x in row) for row in vertices)
    out.extend("3 " + " ".join(str(int(i)) for i in f) for f in faces)
    Path(path).write_text("\n".join(out) + "\n")


def read_ply(path):
    """Read an ASCII PLY file into ``(vertices, faces, metadata)``."""
    path = Path(path)
    text = path.read_text()
    raw = text.splitlines()
    if not raw or raw[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", line=1, path=path)
    elements = []
    lineno = 1
    fmt = None
    meta = {}
    while True:
        lineno += 1
        if lineno > len(raw):
            raise ParseError("header not terminated by end_header", path=path)
        tok = raw[lineno - 1].split()
        if not tok:
            continue
        if tok[0] == "format":
            fmt = tok[1] if len(tok) > 1 else None
            if fmt != "ascii":
                raise ParseError(f"only ascii PLY is supported, got {fmt!r}", line=lineno, path=path)
        elif tok[0] == "comment":
            m = re.match(r"genus\s*[:=]?\s*(-?\d+)$", " ".join(tok[1:]), re.IGNORECASE)
            if m:
                meta["genus"] = int(m.group(1))
        elif tok[0] == "element":
            try:
                elements.append([tok[1], int(tok[2]), []])
            except (IndexError, ValueError):
                raise ParseError("bad element line", line=lineno, path=path) from None
        elif tok[0] == "property":
            if not elements:
                raise ParseError("property before element", line=lineno, path=path)
            elements[-1][2].append(tok[-1] if tok[1] != "list" else ("list", tok[-1]))
        elif tok[0] == "end_header":
            break
        elif tok[0] == "obj_info":
            continue
        else:
            raise ParseError(f"unexpected header keyword {tok[0]!r}", line=lineno, path=path)
    if fmt is None:
        raise ParseError("missing format line", path=path)
    body = []
    for i in range(lineno, len(raw)):
        tok = raw[i].split()
        if tok:
            body.append((i + 1, tok))
    pos = 0
    verts = faces = None
    nv = 0
    for name, count, props in elements:
        if pos + count > len(body):
            raise ParseError(f"element {name!r} expects {count} rows, file ended", path=path)
        rows = body[pos:pos + count]
        pos += count
        if name == "vertex":
            try:
                cols = [props.index(c) for c in ("x", "y", "z")]
            except ValueError:
                raise ParseError("vertex element lacks x/y/z", path=path) from None
            nv = count
            verts = []
            for ln, tok in rows:
                try:
                    verts.append([float(tok[c]) for c in cols])
                except (ValueError, IndexError):
                    raise ParseError(f"bad vertex row {tok}", line=ln, path=path) from None
        elif name == "face":
            faces = []
            for ln, tok in rows:
                try:
                    k = int(tok[0])
                    idx = [int(x) for x in tok[1:k + 1]]
                except ValueError:
                    raise ParseError(f"bad face row {tok}", line=ln, path=path) from None
                if k < 3 or len(idx) != k:
                    raise ParseError(f"face declares {k} vertices but lists {len(idx)}", line=ln, path=path)
                bad = [i for i in idx if i < 0 or i >= nv]
                if bad:
                    raise ParseError(f"face index {bad[0]} out of range for {nv} vertices", line=ln, path=path)
                faces.extend(_triangulate(idx))
    if verts is None:
        raise ParseError("no vertex element", path=path)
    faces = faces or []
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3), meta


def write_ply(path, vertices, faces, comments=()):
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    out = ["ply", "format ascii 1.0"]
    out.extend(f"comment {c}" for c in comments)
    out += [
        f"element vertex {len(vertices)}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    out.extend(" ".join(FLOAT_FMT % x for x in row) for row in vertices)
    out.extend("3 " + " ".join(str(int(i)) for i in f) for f in faces)
    Path(path).write_text("\n".join(out) + "\n")


def _infer_format(path, format):
    if format is not None:
        fmt = format.lower().replace("-ascii", "").replace("_ascii", "")
    else:
        fmt = Path(path).suffix.lower().lstrip(".")
    if fmt not in ("off", "ply"):
        raise GeometryError(f"unsupported mesh format {format or Path(path).suffix!r}; use OFF or PLY")
    return fmt


def load_mesh(path, format=None):
    """Load and validate a triangle mesh from OFF or ASCII PLY.

    Polygonal faces are fan-triangulated. A ``genus`` comment in the header,
    when present, is checked against the Euler characteristic.
    """
    fmt = _infer_format(path, format)
    if not Path(path).exists():
        raise GeometryError(f"no such file: {path}")
    v, f, meta = (read_off if fmt == "off" else read_ply)(path)
    mesh = TriangleMesh(v, f, metadata=meta)
    if "genus" in meta:
        expected = 2 - 2 * meta["genus"]
        if mesh.euler_characteristic != expected:
            raise GeometryError(
                f"Euler characteristic {mesh.euler_characteristic} contradicts declared genus {meta['genus']}"
            )
    logger.info("loaded %s: %d vertices, %d faces", path, mesh.n_vertices, mesh.n_faces)
    return mesh


def save_mesh(mesh, path, format=None):
    fmt = _infer_format(path, format)
    comments = [f"genus {mesh.metadata['genus']}"] if "genus" in mesh.metadata else []
    (write_off if fmt == "off" else write_ply)(path, mesh.vertices, mesh.faces, comments)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_point_cloud(path, dim_hint=None, n_neighbors=DEFAULT_KNN):
    """Load a CSV point cloud; a non-numeric first row is treated as a header.

    ``dim_hint`` is the intrinsic dimension; it defaults to 2.
    """
    path = Path(path)
    if not path.exists():
        raise GeometryError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise GeometryError(f"{path}: empty input, no data rows")
    width = len(rows[0][1])
    data = []
    for lineno, r in rows:
        if len(r) != width:
            raise ParseError(f"ragged row: {len(r)} columns, expected {width}", line=lineno, path=path)
        try:
            data.append([float(c) for c in r])
        except ValueError:
            raise ParseError(f"non-numeric value in row {r}", line=lineno, path=path) from None
    return PointCloud(np.array(data), 2 if dim_hint is None else dim_hint, n_neighbors=n_neighbors)


def save_point_cloud(cloud_or_points, path, header=None):
    pts = getattr(cloud_or_points, "points", cloud_or_points)
    pts = np.asarray(pts, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in pts:
            w.writerow([FLOAT_FMT % x for x in row])


# ---------------------------------------------------------------------------
# generated shapes


def icosphere(subdivisions=4, radius=1.0):
    """Subdivided icosahedron projected to the sphere.

    ``subdivisions=4`` gives 2562 vertices and 5120 faces.
    """
    t = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    verts = list(v)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = np.array(new, dtype=np.int64)
    return TriangleMesh(np.array(verts) * radius, f, metadata={"genus": 0})


def bumpy_ellipsoid(subdivisions=3, axes=(1.0, 0.8, 0.6), bump=0.08, n_bumps=5, seed=0):
    """Icosphere stretched to an ellipsoid and dented by Gaussian bumps.

    Distinct semi-axes and randomly placed bumps leave the surface with no
    symmetry, so its Laplacian spectrum is simple at low frequencies.
    """
    base = icosphere(subdivisions)
    rng = np.random.default_rng(seed)
    P = base.vertices
    centres = rng.standard_normal((n_bumps, 3))
    centres /= np.linalg.norm(centres, axis=1, keepdims=True)
    heights = bump * rng.uniform(0.5, 1.0, n_bumps)
    r = 1.0 + np.exp(-np.sum((P[:, None, :] - centres[None]) ** 2, axis=2) / 0.18) @ heights
    V = P * r[:, None] * np.asarray(axes, dtype=float)
    return TriangleMesh(V, base.faces, metadata={"genus": 0})
