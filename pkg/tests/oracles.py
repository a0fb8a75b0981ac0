"""Independent reference computations used as test oracles."""

import itertools

import numpy as np


def set_partitions(n, k):
    """All labelings of n units into exactly k non-empty clusters, one per set partition
    (restricted growth strings)."""
    out = []

    def rec(prefix, used):
        if len(prefix) == n:
            if used == k:
                out.append(list(prefix))
            return
        if used + (n - len(prefix)) < k:
            return
        for c in range(min(used + 1, k)):
            rec(prefix + [c], max(used, c + 1))

    rec([], 0)
    return np.array(out, dtype=np.int64)


def brute_force_minimum(adj, k, image=None):
    """Minimum criterion over every partition, by one-hot matrix algebra."""
    adj = np.asarray(adj, dtype=np.int64)
    n = adj.shape[0]
    labs = set_partitions(n, k)
    if image is not None:
        # a prescribed image is not invariant under relabeling: use all labelings
        labs = np.array([p for p in itertools.product(range(k), repeat=n)
                         if len(set(p)) == k], dtype=np.int64)
    Z = np.eye(k, dtype=np.int64)[labs]                     # (P, n, k)
    L = np.einsum("pik,ij,pjl->pkl", Z, adj, Z)             # links per block
    s = Z.sum(axis=1)                                        # (P, k)
    cells = s[:, :, None] * s[:, None, :] - np.einsum("pk,kl->pkl", s, np.eye(k, dtype=np.int64))
    zeros = cells - L
    if image is None:
        P = np.minimum(L, zeros).sum(axis=(1, 2))
    else:
        img = np.asarray(image, dtype=bool)
        P = np.where(img[None], zeros, L).sum(axis=(1, 2))
    return int(P.min())


def raw_stats_loops(adj, i):
    """Mechanism statistics by explicit enumeration over units."""
    adj = np.asarray(adj)
    n = adj.shape[0]
    indeg = [sum(int(adj[x, y]) for x in range(n)) for y in range(n)]
    s = np.full((5, n), np.nan)
    for j in range(n):
        if j == i:
            continue
        s[0, j] = adj[j, i]
        s[1, j] = indeg[j]
        s[2, j] = -abs(indeg[i] - indeg[j])
        s[3, j] = sum(1 for k in range(n) if k not in (i, j) and adj[i, k] and adj[k, j])
        s[4, j] = sum(1 for k in range(n) if k not in (i, j) and adj[i, k] and adj[j, k])
    return s


def planted_core_cohesive(sizes, rng=None):
    """Ideal symmetric core-cohesive network; first size is the core.

    Returns ``(adj, labels)`` with units shuffled when ``rng`` is given.
    """
    labels = np.repeat(np.arange(len(sizes)), sizes)
    same = labels[:, None] == labels[None, :]
    core = (labels[:, None] == 0) | (labels[None, :] == 0)
    adj = (same | core).astype(np.int8)
    np.fill_diagonal(adj, 0)
    if rng is not None:
        perm = rng.permutation(labels.size)
        adj = adj[np.ix_(perm, perm)]
        labels = labels[perm]
    return adj, labels
