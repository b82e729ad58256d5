"""Smallest generalized eigenpairs of a :class:`LaplacianPair`.

The solver is a block Lanczos iteration with full reorthogonalization on
``A = M^{-1/2} L M^{-1/2}``. Ritz pairs come from an explicit Rayleigh-Ritz
projection onto the Krylov basis, so an exhausted or broken-down recurrence
is handled by injecting fresh (seeded) directions. A block of width ``b``
resolves eigenvalue multiplicities up to ``b``.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceError, LapEmbedError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_BLOCK = 8
DEGENERACY_TOL = 1e-3
DENSE_MAX_N = 2000
START_SEED = 20240101


def fingerprint(lap):
    """Short content hash of a LaplacianPair."""
    h = hashlib.sha256()
    L = lap.stiffness.tocsr()
    L.sort_indices()
    for a in (L.indptr, L.indices, L.data, lap.mass):
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with mass-orthonormal, sign-normalized eigenvectors.

    Column 0 is the constant mode. ``residuals[j]`` is
    ``|A y_j - lam_j y_j| / max(1, lam_j)`` for the symmetrized operator,
    which bounds ``|L phi - lam M phi| / (max(1, lam) |phi|_M)``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    mass: np.ndarray
    source: str = ""
    volume: float = 1.0
    info: dict = field(default_factory=dict)

    @property
    def count(self):
        """Number of nonconstant pairs."""
        return len(self.eigenvalues) - 1

    @property
    def n(self):
        return self.eigenvectors.shape[0]

    @property
    def raw_eigenvalues(self):
        """Eigenvalues of the shape before unit-volume normalization."""
        return self.eigenvalues / self.volume

    def groups(self, degeneracy_tol=DEGENERACY_TOL, start=1, stop=None):
        return degenerate_groups(self.eigenvalues, degeneracy_tol, start, stop)

    def truncated(self, count):
        if count > self.count:
            raise LapEmbedError(f"spectrum holds {self.count} nonconstant pairs, asked for {count}")
        return Spectrum(
            self.eigenvalues[:count + 1],
            self.eigenvectors[:, :count + 1],
            self.residuals[:count + 1],
            self.mass,
            self.source,
            self.volume,
            dict(self.info),
        )

    def gram(self):
        phi = self.eigenvectors
        return phi.T @ (self.mass[:, None] * phi)

    def save(self, path):
        """Text format: header lines, eigenvalues, mass, then one row per vertex."""
        lines = [
            f"# spectrum N {self.n} m {self.count} volume {self.volume!r} source {self.source or '-'}",
            "lambda " + " ".join(f"{x:.17g}" for x in self.eigenvalues),
            "residual " + " ".join(f"{x:.17g}" for x in self.residuals),
            "mass " + " ".join(f"{x:.17g}" for x in self.mass),
        ]
        lines += [" ".join(f"{x:.17g}" for x in row) for row in self.eigenvectors]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        lines = Path(path).read_text().splitlines()
        head = lines[0].split()
        n, volume, source = int(head[3]), float(head[7]), head[9]
        lam = np.array(lines[1].split()[1:], dtype=float)
        res = np.array(lines[2].split()[1:], dtype=float)
        mass = np.array(lines[3].split()[1:], dtype=float)
        vecs = np.array([r.split() for r in lines[4:4 + n]], dtype=float).reshape(n, len(lam))
        return cls(lam, vecs, res, mass, "" if source == "-" else source, volume)


def degenerate_groups(eigenvalues, degeneracy_tol=DEGENERACY_TOL, start=1, stop=None):
    """Index ranges of numerically repeated eigenvalues.

    Consecutive eigenvalues with ``|lam_i - lam_j| <= tol * lam_j`` are chained
    into one group. Returns a list of ``range`` objects covering
    ``start..stop-1``.
    """
    lam = np.asarray(eigenvalues)
    stop = len(lam) if stop is None else stop
    groups = []
    cur = [start]
    for j in range(start + 1, stop):
        hi = max(abs(lam[j]), abs(lam[j - 1]))
        if abs(lam[j] - lam[j - 1]) <= degeneracy_tol * hi:
            cur.append(j)
        else:
            groups.append(range(cur[0], cur[-1] + 1))
            cur = [j]
    if start < stop:
        groups.append(range(cur[0], cur[-1] + 1))
    return groups


def sign_normalize(vectors):
    """Flip columns so the entry of largest magnitude (first on ties) is positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    idx = np.argmax(np.abs(vectors), axis=0)
    s = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    s[s == 0] = 1.0
    return vectors * s


def _finish(lap, lam, Y, residuals, info):
    phi = Y / np.sqrt(lap.mass)[:, None]
    # re-orthonormalize in the mass inner product (Cholesky of the Gram matrix)
    G = phi.T @ (lap.mass[:, None] * phi)
    C = np.linalg.cholesky(0.5 * (G + G.T))
    phi = scipy.linalg.solve_triangular(C, phi.T, lower=True).T
    phi = sign_normalize(phi)
    if len(lam):
        lam = np.array(lam, dtype=float)
        # the constant mode is exact; clear roundoff so lam_0 >= 0
        if abs(lam[0]) <= 1e-8 * max(abs(lam[-1]), 1.0):
            lam[0] = 0.0
    return Spectrum(np.asarray(lam), phi, np.asarray(residuals), np.asarray(lap.mass), fingerprint(lap), lap.volume, info)


def _check_count(lap, count):
    count = int(count)
    if count < 0:
        raise LapEmbedError("count must be nonnegative")
    if count > lap.n - 1:
        raise LapEmbedError(f"count={count} exceeds N-1={lap.n - 1}")
    return count


def dense_oracle(lap, count):
    """Full dense symmetric decomposition; reference for small problems."""
    count = _check_count(lap, count)
    if lap.n > DENSE_MAX_N:
        raise LapEmbedError(f"dense oracle limited to N <= {DENSE_MAX_N}, got {lap.n}")
    A = lap.symmetrized().toarray()
    A = 0.5 * (A + A.T)
    w, V = scipy.linalg.eigh(A, subset_by_index=[0, count])
    res = np.linalg.norm(A @ V - V * w, axis=0) / np.maximum(1.0, np.abs(w))
    return _finish(lap, w, V, res, {"method": "dense"})


def _start_block(lap, b, rng):
    n = lap.n
    X = rng.standard_normal((n, b))
    ones = np.sqrt(lap.mass)
    ones = ones / np.linalg.norm(ones)
    X[:, 0] = ones + 1e-3 * X[:, 0] / np.sqrt(n)
    return X


def _ritz(H, k, band, m, rng):
    """Lowest ``m`` eigenpairs of the leading ``k x k`` block of H.

    With full reorthogonalization the projection is block tridiagonal, so
    only ``band`` subdiagonals enter. Eigenvalues come from the banded
    solver; eigenvectors from two steps of shifted inverse iteration (banded
    LU) followed by a small Rayleigh-Ritz step that separates clusters.
    """
    band = min(band, k - 1)
    Hk = H[:k, :k]
    low = np.zeros((band + 1, k))
    for d in range(band + 1):
        low[d, :k - d] = 0.5 * (np.diagonal(Hk, -d) + np.diagonal(Hk, d))
    theta = scipy.linalg.eig_banded(low, lower=True, eigvals_only=True, select="i", select_range=(0, m - 1))
    # general banded storage of the symmetric matrix for gbsv
    ab = np.zeros((2 * band + 1, k))
    ab[band] = low[0]
    for d in range(1, band + 1):
        ab[band + d, :k - d] = low[d, :k - d]
        ab[band - d, d:] = low[d, :k - d]

    def matvec(X):
        out = low[0][:, None] * X
        for d in range(1, band + 1):
            out[d:] += low[d, :k - d][:, None] * X[:-d]
            out[:-d] += low[d, :k - d][:, None] * X[d:]
        return out

    scale = max(np.abs(theta).max(), 1.0)
    V = rng.standard_normal((k, m))
    for i, t in enumerate(theta):
        shifted = ab.copy()
        shifted[band] -= t + 1e-13 * scale
        x = V[:, i]
        for _ in range(2):
            x = scipy.linalg.solve_banded((band, band), shifted, x, check_finite=False)
            x /= np.linalg.norm(x)
        V[:, i] = x
    V, _ = np.linalg.qr(V)
    w, U = np.linalg.eigh(V.T @ matvec(V))
    return w, V @ U


def smallest_eigenpairs(lap, count, tol=DEFAULT_TOL, block_size=DEFAULT_BLOCK, max_iter=None, seed=START_SEED, check_every=4):
    """The ``count + 1`` smallest generalized eigenpairs of ``(L, M)``.

    Parameters
    ----------
    lap : LaplacianPair
    count : int
        Number of nonconstant pairs wanted; the constant mode is always included.
    tol : float
        Converged when ``|A y - lam y| <= tol * max(1, lam)`` for every pair.
    block_size : int
        Lanczos block width; must be at least the largest multiplicity among
        the wanted eigenvalues for those copies to be found reliably.
    max_iter : int, optional
        Cap on block steps; defaults to the number needed to span the space.
    seed : int
        Seed of the start block perturbation. Results are bit-identical for
        identical inputs and seed.
    check_every : int
        Block steps between Rayleigh-Ritz convergence checks.

    Raises
    ------
    ConvergenceError
        When the iteration cap is hit; carries the best residuals seen.
    """
    count = _check_count(lap, count)
    if not tol > 0:
        raise LapEmbedError("tol must be positive")
    n = lap.n
    want = count + 1
    b = max(1, min(int(block_size), n))
    A = lap.symmetrized().tocsr()
    rng = np.random.default_rng(seed)
    cap = int(np.ceil(n / b)) + 1
    max_iter = cap if max_iter is None else min(int(max_iter), cap)
    anorm = float(abs(A).sum(axis=1).max())

    Q, _ = np.linalg.qr(_start_block(lap, b, rng))
    cap_cols = min(n, b * 32)
    basis = np.empty((n, cap_cols), order="F")
    H = np.zeros((cap_cols, cap_cols))
    k = 0  # basis columns in use
    best = None
    steps = 0
    for steps in range(1, max_iter + 1):
        w_cols = Q.shape[1]
        if k + w_cols > basis.shape[1]:
            grow = min(n, 2 * basis.shape[1])
            basis = np.asfortranarray(np.hstack([basis, np.empty((n, grow - basis.shape[1]))]))
            H2 = np.zeros((grow, grow))
            H2[:k, :k] = H[:k, :k]
            H = H2
        basis[:, k:k + w_cols] = Q
        AQ = A @ Q
        lo = max(0, k - b)
        # only the previous block couples to the new one
        H[lo:k + w_cols, k:k + w_cols] = basis[:, lo:k + w_cols].T @ AQ
        H[k:k + w_cols, lo:k] = H[lo:k, k:k + w_cols].T
        k += w_cols

        full = k >= n
        if full or steps % check_every == 0 or steps == max_iter:
            m = min(want, k)
            if full:
                w, V = scipy.linalg.eigh(0.5 * (H[:k, :k] + H[:k, :k].T), subset_by_index=[0, m - 1])
            else:
                w, V = _ritz(H, k, 2 * b - 1, m, np.random.default_rng(seed + steps))
            Y = basis[:, :k] @ V
            R = A @ Y - Y * w
            res = np.linalg.norm(R, axis=0) / np.maximum(1.0, np.abs(w))
            if m == want and (best is None or res.max() < best[2].max()):
                best = (w, Y, res)
            if m == want and (res.max() <= tol or full):
                if res.max() > tol:
                    logger.warning("Krylov space exhausted with residual %.3e > tol", res.max())
                return _finish(lap, w, Y, res, {"method": "block-lanczos", "steps": steps, "basis": k, "block": b})
        if full:
            break

        Wb = AQ - basis[:, lo:k] @ H[lo:k, k - w_cols:k]
        B = basis[:, :k]
        norms0 = np.linalg.norm(Wb, axis=0)
        # full reorthogonalization; a second pass only when cancellation was severe
        Wb -= B @ (B.T @ Wb)
        if np.any(np.linalg.norm(Wb, axis=0) < 0.7 * norms0):
            Wb -= B @ (B.T @ Wb)
        room = n - k
        if room < Wb.shape[1]:
            Wb = Wb[:, :room]
        Qn, Rn = np.linalg.qr(Wb)
        dead = np.abs(np.diag(Rn)) <= 1e-10 * max(anorm, 1.0)
        if dead.any():
            # invariant subspace reached; continue with fresh seeded directions
            fresh = rng.standard_normal((n, int(dead.sum())))
            keep = Qn[:, ~dead]
            for _ in range(2):
                fresh -= B @ (B.T @ fresh)
                fresh -= keep @ (keep.T @ fresh)
            Qn, _ = np.linalg.qr(np.hstack([keep, fresh]))
        Q = Qn

    w, Y, res = best if best is not None else (np.array([]), None, np.array([np.inf]))
    raise ConvergenceError(
        f"block Lanczos did not reach tol={tol:g} after {steps} steps (best max residual {res.max():.3e})",
        residuals=res,
        eigenvalues=w,
    )


def subspace_angle(X, Y, mass=None):
    """Largest principal angle between column spans, in the mass inner product if given."""
    if mass is not None:
        s = np.sqrt(mass)[:, None]
        X, Y = X * s, Y * s
    qx, _ = np.linalg.qr(X)
    qy, _ = np.linalg.qr(Y)
    sv = np.linalg.svd(qx.T @ qy, compute_uv=False)
    return float(np.arccos(np.clip(sv.min(), -1.0, 1.0)))
