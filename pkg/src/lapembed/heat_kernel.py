"""Truncated heat kernels and an empirical separation certificate.

The truncated kernel ``p^k(t, x, y) = sum_{j<=k} exp(-lambda_j t) phi_j(x) phi_j(y)``
includes the constant mode, which equals 1 under unit-volume normalization.
If ``p^d(T, x, x) > p^d(T, x, y)`` then ``Phi^d(x) != Phi^d(y)``: with equal
rows the two values coincide. The certificate evaluates that inequality
directly on the sampled far pairs instead of bounding it analytically.
"""

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._pairs import pair_norms, vertex_pairs
from .exceptions import LapEmbedError

N_TIMES = 16


def _check_t(t):
    t = float(t)
    if not t > 0:
        raise LapEmbedError(f"time must be positive, got {t}")
    return t


def _check_k(spec, k):
    k = int(k)
    if k < 0 or k > spec.count:
        raise LapEmbedError(f"truncation order {k} outside 0..{spec.count}")
    return k


@dataclass(frozen=True)
class HeatKernelTruncation:
    spectrum: object
    k: int
    t: float

    def __post_init__(self):
        _check_k(self.spectrum, self.k)
        _check_t(self.t)

    def __call__(self, i, j):
        return partial_heat_kernel(self.spectrum, self.k, self.t, i, j)

    def diagonal(self):
        return heat_kernel_diagonal(self.spectrum, self.k, self.t)


def partial_heat_kernel(spec, k, t, i, j):
    """``sum_{l=0}^{k} exp(-lambda_l t) phi_l(i) phi_l(j)``; ``i, j`` may be arrays."""
    k = _check_k(spec, k)
    t = _check_t(t)
    w = np.exp(-spec.eigenvalues[:k + 1] * t)
    phi = spec.eigenvectors[:, :k + 1]
    i = np.asarray(i)
    j = np.asarray(j)
    # products are formed as (phi_i * phi_j) so that swapping i and j is exact;
    # terms are added in order so that the diagonal agrees with heat_kernel_partial_sums
    val = np.cumsum((phi[i] * phi[j]) * w, axis=-1)[..., -1]
    return float(val) if val.ndim == 0 else val


def heat_kernel_partial_sums(spec, t):
    """``p^k(t, x, x)`` for ``k = 0..count`` as columns, shape (N, count + 1).

    Terms are accumulated left to right, so each row is nondecreasing in
    floating point, not only in exact arithmetic.
    """
    t = _check_t(t)
    w = np.exp(-spec.eigenvalues * t)
    phi = spec.eigenvectors
    return np.cumsum((phi * phi) * w, axis=1)


def heat_kernel_diagonal(spec, k, t):
    """``p^k(t, x, x)`` for every vertex."""
    k = _check_k(spec, k)
    return heat_kernel_partial_sums(spec.truncated(k) if k < spec.count else spec, t)[:, k]


def empirical_remainder(spec, k, t):
    """``max_x sum_{j=k}^{K-1} exp(-lambda_j t) phi_j(x)^2`` over computed modes.

    ``K`` is the number of computed pairs (``spec.count + 1``); ``k = K`` gives
    the empty sum 0. The tail beyond ``K`` is unknown, so this is a lower bound
    on the true remainder.
    """
    k = int(k)
    K = spec.count + 1
    if k < 0 or k > K:
        raise LapEmbedError(f"remainder index {k} outside 0..{K}")
    t = _check_t(t)
    if k == K:
        return 0.0
    w = np.exp(-spec.eigenvalues[k:K] * t)
    phi = spec.eigenvectors[:, k:K]
    return float(((phi * phi) @ w).max())


def default_time_grid(spec, d_max, n=N_TIMES):
    """Log-spaced times in ``[1 / (10 lambda_dmax), 10 / lambda_1]``."""
    lam1 = spec.eigenvalues[1]
    lamm = spec.eigenvalues[min(d_max, spec.count)]
    if not lam1 > 0:
        raise LapEmbedError("time grid needs lambda_1 > 0")
    return np.geomspace(1.0 / (10.0 * lamm), 10.0 / lam1, n)


@dataclass(frozen=True)
class SeparationCertificate:
    """Outcome of a separation scan.

    ``margin`` is ``min p^d(T,x,x) - p^d(T,x,y)`` over tested far pairs, both
    orderings of each pair; ``passed`` iff ``margin > 0``. On failure ``d``
    and ``T`` record where the best margin was found.
    """

    d: int
    T: float
    epsilon: float
    margin: float
    pairs_tested: int
    passed: bool
    sampling: str = "all"

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")


def far_pairs(gd, epsilon, seed=0):
    """Tested vertex pairs with graph distance ``>= epsilon``."""
    i, j, mode = vertex_pairs(gd.n_vertices, seed=seed)
    d = gd.between(i, j)
    keep = d >= epsilon
    return i[keep], j[keep], mode


def separation_margin(spec, d, t, i, j):
    """``min`` over pairs and orderings of ``p^d(t,x,x) - p^d(t,x,y)``."""
    w = np.exp(-spec.eigenvalues[1:d + 1] * t)
    phi = spec.eigenvectors[:, 1:d + 1]
    # the constant mode contributes 1 - 1 = 0
    xi, xj = phi[i], phi[j]
    cross = (xi * xj) @ w
    di = (xi * xi) @ w
    dj = (xj * xj) @ w
    return float(min((di - cross).min(), (dj - cross).min()))


def separation_certificate(spec, gd, epsilon, d_max, t_grid=None, seed=0):
    """Smallest ``d <= d_max`` whose truncated kernel separates all far pairs.

    Scans ``d = 1..d_max`` and each ``t`` in ``t_grid``. For the first ``d`` with
    a positive margin, ``T`` is the grid time with the largest margin.
    """
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise LapEmbedError("epsilon must be positive")
    d_max = int(d_max)
    if d_max < 1 or d_max > spec.count:
        raise LapEmbedError(f"d_max={d_max} outside 1..{spec.count}")
    t_grid = default_time_grid(spec, d_max) if t_grid is None else np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t_grid.size == 0:
        raise LapEmbedError("t_grid is empty")
    if np.any(t_grid <= 0):
        raise LapEmbedError("t_grid must be positive")
    i, j, mode = far_pairs(gd, epsilon, seed=seed)
    if len(i) == 0:
        return SeparationCertificate(1, float(t_grid[0]), epsilon, math.inf, 0, True, mode)

    phi = spec.eigenvectors
    xi, xj = phi[i], phi[j]
    pi, pj, px = xi * xi, xj * xj, xi * xj
    best = (-math.inf, 1, float(t_grid[0]))
    for d in range(1, d_max + 1):
        top = (-math.inf, None)
        for t in t_grid:
            w = np.exp(-spec.eigenvalues[1:d + 1] * t)
            cross = px[:, 1:d + 1] @ w
            margin = min(float((pi[:, 1:d + 1] @ w - cross).min()), float((pj[:, 1:d + 1] @ w - cross).min()))
            if margin > top[0]:
                top = (margin, float(t))
        if top[0] > 0:
            return SeparationCertificate(d, top[1], epsilon, top[0], int(len(i)), True, mode)
        if top[0] > best[0]:
            best = (top[0], d, top[1])
    margin, d, T = best
    return SeparationCertificate(d, T, epsilon, margin, int(len(i)), False, mode)


def verify_certificate(cert, spec, gd, seed=0):
    """Direct check of a certificate against ``Phi^d`` on the same pairs.

    Returns ``(fraction_separated, min_image_distance)`` over the tested far
    pairs, where separated means ``|Phi^d(x) - Phi^d(y)| > 0``.
    """
    i, j, _ = far_pairs(gd, cert.epsilon, seed=seed)
    if len(i) == 0:
        return 1.0, math.inf
    dist = pair_norms(spec.eigenvectors[:, 1:cert.d + 1], i, j)
    return float(np.mean(dist > 0)), float(dist.min())
