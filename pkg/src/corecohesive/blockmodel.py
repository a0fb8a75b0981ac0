"""Generalized blockmodeling of binary networks under structural equivalence.

Only null and complete blocks exist. The error of a block is the number of
1s (read as null) or the number of 0s (read as complete); the criterion ``P``
sums the errors over all blocks. Diagonal cells of diagonal blocks are not
counted because networks are loop-free.

Fitting is steepest-descent local search over relocation and exchange
moves, restarted from random partitions. The search kernel keeps per-block
link counts and per-unit link counts into each cluster so every candidate
move is scored in O(k^2).
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

NULL = "null"
COMPLETE = "com"


class PartitionError(ValueError):
    pass


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Partition:
    labels: np.ndarray
    k: int = field(default=None)

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.int64, copy=True)
        if lab.ndim != 1:
            raise PartitionError("labels must be one-dimensional")
        k = int(lab.max()) + 1 if self.k is None and lab.size else int(self.k or 0)
        if lab.size and (lab.min() < 0 or lab.max() >= k):
            raise PartitionError(f"cluster labels must lie in [0, {k})")
        sizes = np.bincount(lab, minlength=k)
        if np.any(sizes == 0):
            raise PartitionError(f"empty cluster(s): {np.flatnonzero(sizes == 0).tolist()}")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "k", k)

    @property
    def n(self):
        return self.labels.size

    def sizes(self):
        return np.bincount(self.labels, minlength=self.k)

    def members(self, g):
        return np.flatnonzero(self.labels == g)

    def canonical(self):
        """Relabel clusters in order of first appearance."""
        mapping = {}
        for x in self.labels:
            mapping.setdefault(int(x), len(mapping))
        return Partition([mapping[int(x)] for x in self.labels], self.k)

    def same_clusters(self, other):
        """True if both partitions group units identically, up to label names."""
        return np.array_equal(self.canonical().labels, other.canonical().labels)

    def order(self):
        """Unit order that groups clusters together (stable within clusters)."""
        return np.argsort(self.labels, kind="stable")

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.k, self.labels.tobytes()))


@dataclass(frozen=True, eq=False)
class BlockImage:
    """``k x k`` image; ``complete[g, h]`` is True for a complete block."""

    complete: np.ndarray

    def __post_init__(self):
        c = np.array(self.complete, dtype=bool, copy=True)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ModelError(f"image must be square, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "complete", c)

    @property
    def k(self):
        return self.complete.shape[0]

    @classmethod
    def from_strings(cls, rows):
        table = {NULL: False, "nul": False, "n": False, COMPLETE: True, "complete": True, "c": True}
        try:
            return cls([[table[str(x).strip().lower()] for x in r] for r in rows])
        except KeyError as exc:
            raise ModelError(f"unknown block type {exc.args[0]!r}") from None

    def to_strings(self):
        return [[COMPLETE if x else NULL for x in row] for row in self.complete]

    def permuted(self, perm):
        perm = np.asarray(perm)
        return BlockImage(self.complete[np.ix_(perm, perm)])

    def __eq__(self, other):
        if not isinstance(other, BlockImage):
            return NotImplemented
        return np.array_equal(self.complete, other.complete)

    def __hash__(self):
        return hash(self.complete.tobytes())

    def __repr__(self):
        return "BlockImage(" + "; ".join(" ".join(r) for r in self.to_strings()) + ")"


@dataclass(frozen=True, eq=False)
class BlockmodelFit:
    partition: Partition
    image: BlockImage
    criterion: int
    block_errors: np.ndarray

    def to_dict(self):
        return {
            "partition": self.partition.labels.tolist(),
            "k": self.partition.k,
            "image": self.image.to_strings(),
            "criterion": int(self.criterion),
            "block_errors": self.block_errors.astype(int).tolist(),
        }


def _adj(net):
    return np.asarray(net.adj if hasattr(net, "adj") else net, dtype=np.int64)


def _as_partition(p):
    return p if isinstance(p, Partition) else Partition(p)


def block_errors(net, p, g, h):
    """Return ``(null_error, complete_error)`` for block ``(g, h)``."""
    p = _as_partition(p)
    a = _adj(net)
    if a.shape[0] != p.n:
        raise PartitionError("partition size does not match network")
    rows = p.members(g)
    cols = p.members(h)
    if rows.size == 0 or cols.size == 0:
        raise PartitionError(f"empty cluster in block ({g}, {h})")
    ones = int(a[np.ix_(rows, cols)].sum())
    cells = rows.size * cols.size - (rows.size if g == h else 0)
    return ones, cells - ones


def _error_table(net, p):
    k = p.k
    nulls = np.zeros((k, k), dtype=np.int64)
    comps = np.zeros((k, k), dtype=np.int64)
    for g in range(k):
        for h in range(k):
            nulls[g, h], comps[g, h] = block_errors(net, p, g, h)
    return nulls, comps


def classify_blocks(net, p):
    """Best-fitting block type per block; ties go to null."""
    p = _as_partition(p)
    nulls, comps = _error_table(net, p)
    return BlockImage(comps < nulls)


def criterion(net, p, image=None):
    """Criterion value and image of a partition.

    With ``image=None`` every block takes its best type (non-specified
    model); otherwise the errors are those of the prescribed image.
    Returns ``(P, image)``.
    """
    p = _as_partition(p)
    nulls, comps = _error_table(net, p)
    if image is None:
        img = BlockImage(comps < nulls)
    else:
        img = image if isinstance(image, BlockImage) else BlockImage(image)
        if img.k != p.k:
            raise ModelError(f"image is {img.k}x{img.k} but partition has {p.k} clusters")
    errs = np.where(img.complete, comps, nulls)
    return int(errs.sum()), img


def evaluate(net, p, image=None):
    """Full :class:`BlockmodelFit` for a given partition."""
    p = _as_partition(p)
    P, img = criterion(net, p, image)
    nulls, comps = _error_table(net, p)
    return BlockmodelFit(p, img, P, np.where(img.complete, comps, nulls))


# ------------------------------------------------------------ search kernel

@njit(cache=True)
def _total(L, sizes, image, specified):
    k = L.shape[0]
    P = 0
    for g in range(k):
        for h in range(k):
            if g == h:
                cells = sizes[g] * (sizes[g] - 1)
            else:
                cells = sizes[g] * sizes[h]
            ones = L[g, h]
            zeros = cells - ones
            if specified:
                if image[g, h]:
                    P += zeros
                else:
                    P += ones
            elif ones < zeros:
                P += ones
            else:
                P += zeros
    return P


@njit(cache=True)
def _shift(L, mout_v, min_v, a, b, T):
    """Block counts after moving a unit (link profile mout_v/min_v) from a to b."""
    k = L.shape[0]
    for g in range(k):
        for h in range(k):
            T[g, h] = L[g, h]
    for h in range(k):
        T[a, h] -= mout_v[h]
        T[b, h] += mout_v[h]
    for g in range(k):
        T[g, a] -= min_v[g]
        T[g, b] += min_v[g]


@njit(cache=True)
def _apply_move(adj, labels, sizes, L, mout, mins, v, b):
    a = labels[v]
    k = L.shape[0]
    for h in range(k):
        L[a, h] -= mout[v, h]
        L[b, h] += mout[v, h]
    for g in range(k):
        L[g, a] -= mins[v, g]
        L[g, b] += mins[v, g]
    labels[v] = b
    sizes[a] -= 1
    sizes[b] += 1
    n = adj.shape[0]
    for x in range(n):
        mout[x, a] -= adj[x, v]
        mout[x, b] += adj[x, v]
        mins[x, a] -= adj[v, x]
        mins[x, b] += adj[v, x]


@njit(cache=True)
def _descend(adj, labels, k, image, specified):
    """Steepest descent from ``labels`` (modified in place); returns the criterion."""
    n = adj.shape[0]
    sizes = np.zeros(k, dtype=np.int64)
    L = np.zeros((k, k), dtype=np.int64)
    mout = np.zeros((n, k), dtype=np.int64)
    mins = np.zeros((n, k), dtype=np.int64)
    for v in range(n):
        sizes[labels[v]] += 1
    for x in range(n):
        for y in range(n):
            if adj[x, y] != 0:
                L[labels[x], labels[y]] += 1
                mout[x, labels[y]] += 1
                mins[y, labels[x]] += 1
    T = np.zeros((k, k), dtype=np.int64)
    T2 = np.zeros((k, k), dtype=np.int64)
    sz = np.zeros(k, dtype=np.int64)
    mo = np.zeros(k, dtype=np.int64)
    mi = np.zeros(k, dtype=np.int64)
    cur = _total(L, sizes, image, specified)

    while True:
        best = cur
        kind = 0
        bu = -1
        bv = -1
        bb = -1
        # relocations
        for v in range(n):
            a = labels[v]
            if sizes[a] == 1:
                continue
            for b in range(k):
                if b == a:
                    continue
                _shift(L, mout[v], mins[v], a, b, T)
                for g in range(k):
                    sz[g] = sizes[g]
                sz[a] -= 1
                sz[b] += 1
                val = _total(T, sz, image, specified)
                if val < best:
                    best = val
                    kind = 1
                    bu = v
                    bb = b
        # exchanges
        for u in range(n):
            a = labels[u]
            for v in range(u + 1, n):
                b = labels[v]
                if a == b:
                    continue
                _shift(L, mout[u], mins[u], a, b, T)
                for g in range(k):
                    mo[g] = mout[v, g]
                    mi[g] = mins[v, g]
                # v's links to/from u now land in cluster b
                mo[a] -= adj[v, u]
                mo[b] += adj[v, u]
                mi[a] -= adj[u, v]
                mi[b] += adj[u, v]
                _shift(T, mo, mi, b, a, T2)
                val = _total(T2, sizes, image, specified)
                if val < best:
                    best = val
                    kind = 2
                    bu = u
                    bv = v
        if kind == 0:
            break
        if kind == 1:
            _apply_move(adj, labels, sizes, L, mout, mins, bu, bb)
        else:
            a = labels[bu]
            b = labels[bv]
            _apply_move(adj, labels, sizes, L, mout, mins, bu, b)
            _apply_move(adj, labels, sizes, L, mout, mins, bv, a)
        cur = best
    return cur


@njit(cache=True)
def _multi_start(adj, starts, k, image, specified):
    R = starts.shape[0]
    best_val = -1
    best_labels = starts[0].copy()
    work = np.empty(starts.shape[1], dtype=np.int64)
    for r in range(R):
        for v in range(starts.shape[1]):
            work[v] = starts[r, v]
        val = _descend(adj, work, k, image, specified)
        if best_val < 0 or val < best_val:
            best_val = val
            best_labels[:] = work
    return best_labels, best_val


def random_starts(rng, n, k, restarts):
    """Random labelings with every cluster non-empty.

    A random permutation of the units is drawn; its first ``k`` units seed
    clusters ``0..k-1`` and the remaining units are labelled uniformly.
    """
    labels = rng.integers(0, k, size=(restarts, n))
    perms = rng.permuted(np.tile(np.arange(n), (restarts, 1)), axis=1)
    rows = np.arange(restarts)[:, None]
    labels[rows, perms[:, :k]] = np.arange(k)
    return labels.astype(np.int64)


def _image_args(image, k):
    if image is None:
        return np.zeros((k, k), dtype=np.bool_), False
    img = image if isinstance(image, BlockImage) else BlockImage(image)
    if img.k != k:
        raise ModelError(f"image is {img.k}x{img.k} but k = {k}")
    return np.ascontiguousarray(img.complete), True


def local_search(net, p, image=None):
    """Run steepest descent from partition ``p``; returns the local optimum fit."""
    p = _as_partition(p)
    a = np.ascontiguousarray(_adj(net))
    img, specified = _image_args(image, p.k)
    labels = np.array(p.labels, dtype=np.int64)
    _descend(a, labels, p.k, img, specified)
    return evaluate(net, Partition(labels, p.k), image)


def fit(net, k, restarts=500, image=None, rng=None):
    """Best blockmodel over ``restarts`` random starts.

    Parameters
    ----------
    net : BinaryNetwork
    k : int
        Number of clusters.
    restarts : int
        Number of random starting partitions, each descended to a local optimum.
    image : BlockImage or None
        Prescribed image (pre-specified model); ``None`` lets each block
        take its best type.
    rng : numpy.random.Generator, int or None
    """
    a = np.ascontiguousarray(_adj(net))
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ModelError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1:
        raise ModelError("restarts must be positive")
    rng = np.random.default_rng(rng)
    img, specified = _image_args(image, k)
    starts = random_starts(rng, n, k, restarts)
    labels, _ = _multi_start(a, starts, k, img, specified)
    return evaluate(net, Partition(labels, k), image)
