import numpy as np

ALL_PAIRS_MAX_N = 2000
SAMPLED_PAIRS = 10**6
PAIR_SEED = 7


def vertex_pairs(n, max_all=ALL_PAIRS_MAX_N, n_samples=SAMPLED_PAIRS, seed=PAIR_SEED):
    """Index pairs ``i < j`` to test: every pair for small N, else seeded samples.

    Returns ``(i, j, mode)`` with ``mode`` in ``{"all", "sampled"}``.
    """
    if n <= max_all:
        i, j = np.triu_indices(n, k=1)
        return i, j, "all"
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=n_samples)
    j = rng.integers(0, n - 1, size=n_samples)
    j = j + (j >= i)  # uniform over j != i
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    return lo, hi, "sampled"


def pair_norms(X, i, j, chunk=1 << 18):
    """``|X[i] - X[j]|`` row-wise, computed in chunks."""
    out = np.empty(len(i))
    for s in range(0, len(i), chunk):
        d = X[i[s:s + chunk]] - X[j[s:s + chunk]]
        out[s:s + chunk] = np.sqrt(np.einsum("ij,ij->i", d, d))
    return out
