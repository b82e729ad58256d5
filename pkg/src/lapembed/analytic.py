"""Closed-form spectra of the flat stretched torus and the round sphere.

The torus is the rectangle ``[0, a]^(n-1) x [0, b]`` with opposite faces
glued, ``0 < a < b``. Its real eigenfunctions are products of
``cos(2 pi m x / L)`` and ``sin(2 pi m x / L)`` over the axes, with
eigenvalue ``(2 pi)^2 (sum_{i<n} m_i^2 / a^2 + m_n^2 / b^2)``. Lengths are
handled as exact rationals so that ties between eigenvalues, and the
integer case ``b / a in Z``, are decided exactly.
"""

import csv
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from .exceptions import GeometryError, LapEmbedError
from .geometry import FLOAT_FMT
from .laplacian import LaplacianPair, _assemble
from .spectral_maps import EmbeddingCoords

TWO_PI_SQ = (2 * math.pi) ** 2
UNIT_TOL = 1e-9


def _exact(x):
    """Exact rational value of a float, int, Fraction or decimal string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x) if isinstance(x, int) else Fraction(float(x))


def _check_torus(a, b, n):
    a, b = _exact(a), _exact(b)
    n = int(n)
    if not 0 < a < b:
        raise LapEmbedError(f"torus needs 0 < a < b, got a={float(a)}, b={float(b)}")
    if n < 2:
        raise LapEmbedError(f"torus dimension must be at least 2, got {n}")
    return a, b, n


@dataclass(frozen=True)
class TorusMode:
    """One real eigenfunction ``prod_i f_{k_i}(m_i x^i / L_i)``.

    ``k_i = 1`` selects cosine and ``k_i = 2`` sine; axes with ``m_i = 0``
    always use cosine. ``q`` is the exact eigenvalue divided by ``(2 pi)^2``.
    """

    m: tuple
    k: tuple
    q: Fraction

    @property
    def eigenvalue(self):
        return TWO_PI_SQ * float(self.q)

    def label(self):
        trig = "".join("cs"[k - 1] if m else "-" for m, k in zip(self.m, self.k))
        return f"m={self.m} {trig}"


@dataclass(frozen=True)
class TorusSpec:
    """The ``count`` smallest nonconstant torus modes after the constant one.

    ``modes[0]`` is the constant function. Ties are ordered by the axis of
    the first nonzero frequency (lower axis first), then cosine before sine.
    """

    a: Fraction
    b: Fraction
    n: int
    modes: tuple

    @property
    def count(self):
        return len(self.modes) - 1

    @property
    def eigenvalues(self):
        return np.array([mode.eigenvalue for mode in self.modes])

    @property
    def periods(self):
        return (self.a,) * (self.n - 1) + (self.b,)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index"] + [f"m{i + 1}" for i in range(self.n)] + [f"k{i + 1}" for i in range(self.n)] + ["eigenvalue"])
            for j, mode in enumerate(self.modes):
                w.writerow([j, *mode.m, *mode.k, FLOAT_FMT % mode.eigenvalue])


def _q(m, a, b):
    return sum(Fraction(mi * mi) for mi in m[:-1]) / (a * a) + Fraction(m[-1] * m[-1]) / (b * b)


def _tie_key(mode):
    return (mode.q, tuple(-mi for mi in mode.m), mode.k)


def _expand(m, q):
    choices = [(1, 2) if mi else (1,) for mi in m]
    return [TorusMode(tuple(m), k, q) for k in itertools.product(*choices)]


def torus_spectrum(a, b, n=2, count=12):
    """The constant mode followed by the ``count`` smallest nonconstant modes.

    Examples
    --------
    >>> spec = torus_spectrum(1, 2.5, 2, 4)
    >>> [mode.m for mode in spec.modes]
    [(0, 0), (0, 1), (0, 1), (0, 2), (0, 2)]
    """
    a, b, n = _check_torus(a, b, n)
    count = int(count)
    if count < 0:
        raise LapEmbedError("count must be nonnegative")
    R = max(1, math.isqrt(count) + 1)
    while True:
        ra = R
        rb = int(math.ceil(R * b / a))
        modes = []
        for m in itertools.product(range(ra + 1), repeat=n - 1):
            for mn in range(rb + 1):
                mm = tuple(m) + (mn,)
                modes.extend(_expand(mm, _q(mm, a, b)))
        modes.sort(key=_tie_key)
        # every mode outside the box has q above this bound
        bound = min(Fraction((ra + 1) ** 2) / (a * a), Fraction((rb + 1) ** 2) / (b * b))
        if len(modes) > count and modes[count].q < bound:
            return TorusSpec(a, b, n, tuple(modes[:count + 1]))
        R *= 2


def _wrap_points(points, periods):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    L = np.array([float(p) for p in periods])
    if points.shape[1] != len(L):
        raise LapEmbedError(f"points must have {len(L)} coordinates, got {points.shape[1]}")
    return np.mod(points, L), L


def mode_values(mode, points, periods):
    """Values of one mode at ``points`` (shape (P, n)); coordinates wrap."""
    x, L = _wrap_points(points, periods)
    out = np.ones(len(x))
    for i, (mi, ki) in enumerate(zip(mode.m, mode.k)):
        if mi == 0:
            continue
        arg = 2 * math.pi * mi * x[:, i] / L[i]
        out *= np.cos(arg) if ki == 1 else np.sin(arg)
    return out


def torus_eigenfunction(spec, index, point):
    """Value of ``spec.modes[index]`` at ``point`` (scalar for a single point)."""
    if not 0 <= index <= spec.count:
        raise LapEmbedError(f"mode index {index} outside 0..{spec.count}")
    val = mode_values(spec.modes[index], point, spec.periods)
    return float(val[0]) if np.ndim(point) == 1 else val


def torus_embedding_dimension(a, b, n=2):
    """``2 (ceil(b / a) + n - 2)``, with ``b / a`` evaluated exactly."""
    a, b, n = _check_torus(a, b, n)
    return 2 * (math.ceil(b / a) + n - 2)


def torus_lower_bound(a, b, n=2):
    """``2^(1-n) V / inj^n`` with ``V = a^(n-1) b`` and ``inj = a / 2``, as a Fraction."""
    a, b, n = _check_torus(a, b, n)
    return Fraction(2) ** (1 - n) * a ** (n - 1) * b / (a / 2) ** n


def torus_is_integer_case(a, b):
    a, b = _exact(a), _exact(b)
    return (b / a).denominator == 1


def torus_proof_modes(a, b, n, m):
    """First ``m`` modes in the order used to build the injective map.

    Non-integer ``b / a``: the ``p = floor(b / a)`` cosine/sine pairs along
    ``x^n`` followed by one pair per short axis. Integer ``b / a``: the same
    with ``p - 1`` pairs along ``x^n``, so the pair at frequency ``p`` (tied
    with the short-axis pairs) is left out. Past that point the remaining
    modes follow in spectral order.
    """
    a, b, n = _check_torus(a, b, n)
    d = torus_embedding_dimension(a, b, n)
    m = int(m)
    if not 1 <= m <= d + 2:
        raise LapEmbedError(f"m={m} outside 1..d+2={d + 2}")
    ratio = b / a
    p = ratio.numerator // ratio.denominator
    if ratio.denominator == 1:
        p -= 1
    zero = (0,) * n
    order = []
    for k in range(1, p + 1):
        mm = zero[:-1] + (k,)
        order.extend(_expand(mm, _q(mm, a, b)))
    for j in range(n - 1):
        mm = zero[:j] + (1,) + zero[j + 1:]
        order.extend(_expand(mm, _q(mm, a, b)))
    if m > len(order):
        used = {(mode.m, mode.k) for mode in order}
        rest = [mode for mode in torus_spectrum(a, b, n, m + len(order) + 4).modes[1:] if (mode.m, mode.k) not in used]
        order.extend(rest)
    return order[:m]


def torus_proof_basis_coords(a, b, n, points, m):
    """Unnormalized proof-ordered eigenfunctions evaluated at ``points``.

    Parameters
    ----------
    points : ndarray, shape (P, n) or FlatTorusGrid
    m : int
        Number of coordinates; at most ``torus_embedding_dimension + 2``.
    """
    a, b, n = _check_torus(a, b, n)
    pts = points.points if isinstance(points, FlatTorusGrid) else points
    modes = torus_proof_modes(a, b, n, m)
    periods = (a,) * (n - 1) + (b,)
    X = np.column_stack([mode_values(mode, pts, periods) for mode in modes])
    lam = np.array([mode.eigenvalue for mode in modes])
    return EmbeddingCoords(X, "torus-proof-basis", lam, np.ones(len(modes)), None, f"torus a={float(a)} b={float(b)} n={n}")


class PeriodicDistances:
    """Exact flat-torus distances between grid points."""

    def __init__(self, points, periods):
        self.points = np.asarray(points, dtype=float)
        self.periods = np.asarray(periods, dtype=float)

    @property
    def n_vertices(self):
        return len(self.points)

    is_complete = False

    def between(self, i, j):
        d = self.points[np.asarray(i)] - self.points[np.asarray(j)]
        d = np.abs(d)
        d = np.minimum(d, self.periods - d)
        return np.sqrt(np.sum(d * d, axis=-1))


class FlatTorusGrid:
    """Uniform periodic grid on the flat torus.

    Grid point ``(i_1, ..., i_n)`` sits at ``x^j = (i_j + phase) L_j / N_j``
    and is stored at the C-order raveled index. ``phase = 0`` places the
    sample symmetric under ``x -> -x``, which keeps mirror-image collisions
    of cosine coordinates exact instead of hiding them between grid points.
    """

    def __init__(self, a, b, shape, n=None, phase=0.0):
        n = len(shape) if n is None else int(n)
        a, b, n = _check_torus(a, b, n)
        if len(shape) != n:
            raise GeometryError(f"shape must have {n} entries, got {len(shape)}")
        if min(shape) < 3:
            raise GeometryError("each grid axis needs at least 3 points")
        self.a, self.b, self.n = a, b, n
        self.shape = tuple(int(s) for s in shape)
        self.phase = float(phase)
        self.periods = np.array([float(a)] * (n - 1) + [float(b)])
        self.spacing = self.periods / np.array(self.shape)
        axes = [(np.arange(s) + self.phase) * h for s, h in zip(self.shape, self.spacing)]
        grid = np.meshgrid(*axes, indexing="ij")
        self.points = np.stack([g.ravel() for g in grid], axis=1)

    def __repr__(self):
        return f"FlatTorusGrid(a={float(self.a)}, b={float(self.b)}, shape={self.shape})"

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def intrinsic_dim(self):
        return self.n

    @property
    def vertices(self):
        return self.points

    @property
    def volume(self):
        return float(np.prod(self.periods))

    @cached_property
    def edges(self):
        """Axis-neighbour edges ``(i, j)``, one per unordered pair."""
        idx = np.arange(self.n_vertices).reshape(self.shape)
        out = []
        for ax in range(self.n):
            nb = np.roll(idx, -1, axis=ax)
            out.append(np.stack([idx.ravel(), nb.ravel()], axis=1))
        e = np.concatenate(out)
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def edge_axes(self):
        d = self.local_offsets(self.edges[:, 0], self.edges[:, 1])
        return np.argmax(np.abs(d), axis=1)

    @property
    def edge_lengths(self):
        return np.linalg.norm(self.local_offsets(self.edges[:, 0], self.edges[:, 1]), axis=1)

    @property
    def mean_edge_length(self):
        return float(self.edge_lengths.mean())

    @cached_property
    def adjacency(self):
        e = self.edges
        w = self.edge_lengths
        n = self.n_vertices
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.coo_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n)).tocsr()

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def local_offsets(self, i, nbrs):
        """Shortest periodic displacement from ``i`` to ``nbrs``."""
        d = self.points[nbrs] - self.points[i]
        return d - self.periods * np.round(d / self.periods)

    def distances(self):
        return PeriodicDistances(self.points, self.periods)

    def laplacian(self):
        """Second-difference Laplacian as a stiffness/mass pair.

        Edge weights are ``(V / N) / h^2`` along each axis and the mass is
        uniform ``1 / N``, so eigenvalues approximate ``V`` times those of the
        torus, matching the unit-volume convention of the mesh Laplacians.
        """
        N = self.n_vertices
        e = self.edges
        h = self.spacing[self.edge_axes]
        w = (self.volume / N) / h ** 2
        L, _ = _assemble(N, e[:, 0], e[:, 1], w)
        mass = np.full(N, 1.0 / N)
        return LaplacianPair(L, mass, "torus-grid", self.volume, {"shape": list(self.shape)})


@dataclass(frozen=True)
class SphereSpec:
    """Eigenvalue table of the round unit ``S^n``; rows are ``(k, lambda, multiplicity)``."""

    n: int
    degrees: tuple

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["degree", "eigenvalue", "multiplicity"])
            w.writerows(self.degrees)


def sphere_multiplicity(n, k):
    """``C(n+k, k) - C(n+k-2, k-2)`` (the second term vanishes for ``k < 2``)."""
    second = math.comb(n + k - 2, k - 2) if k >= 2 else 0
    return math.comb(n + k, k) - second


def sphere_spectrum(n, degree_max):
    n, degree_max = int(n), int(degree_max)
    if n < 1:
        raise LapEmbedError("sphere dimension must be at least 1")
    if degree_max < 0:
        raise LapEmbedError("degree_max must be nonnegative")
    rows = tuple((k, k * (n + k - 1), sphere_multiplicity(n, k)) for k in range(degree_max + 1))
    return SphereSpec(n, rows)


def sphere_coordinate_eigenmap(n, points):
    """Coordinate functions on ``S^n`` scaled to unit mean square.

    Under the uniform probability measure each coordinate has mean square
    ``1 / (n + 1)``, hence the factor ``sqrt(n + 1)``.
    """
    n = int(n)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != n + 1:
        raise LapEmbedError(f"points on S^{n} need {n + 1} coordinates, got {points.shape[1]}")
    r = np.linalg.norm(points, axis=1)
    if np.any(np.abs(r - 1) > UNIT_TOL):
        raise GeometryError(f"points must lie on the unit sphere (max |r - 1| = {np.abs(r - 1).max():.3e})")
    s = math.sqrt(n + 1)
    return EmbeddingCoords(points * s, "sphere-coordinates", np.full(n + 1, float(n)), np.full(n + 1, s), None, f"S^{n}")


def save_table(path, header, rows):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
