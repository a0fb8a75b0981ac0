"""Binary and count networks: construction, ingestion, symmetrization.

Networks are stored as dense ``numpy`` arrays. They are small (tens of
units), so dense storage keeps every downstream kernel simple.
"""

import csv
import os
import re
from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when a network is too small for the requested operation."""


class NetworkFormatError(ValueError):
    """Raised for malformed network files or invalid matrices."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CountNetwork:
    """Observed interaction counts; row = ego, column = alter."""

    counts: np.ndarray
    labels: tuple = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise NetworkFormatError(f"count matrix must be square, got shape {c.shape}")
        if not np.all(np.equal(np.mod(c, 1), 0)):
            raise NetworkFormatError("counts must be integers")
        c = c.astype(np.int64)
        if np.any(c < 0):
            raise NetworkFormatError("counts must be non-negative")
        if np.any(np.diag(c) != 0):
            raise NetworkFormatError("counts on the diagonal must be zero")
        object.__setattr__(self, "counts", _frozen(c, np.int64))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @property
    def n(self):
        return self.counts.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryNetwork:
    """A loop-free 0/1 network.

    Parameters
    ----------
    adj : array_like
        Square 0/1 adjacency matrix, ``adj[i, j] = 1`` for a link i -> j.
    directed : bool
        If False the matrix must be symmetric.
    labels : sequence of str, optional
        Unit labels, used only for I/O.
    """

    adj: np.ndarray
    directed: bool = True
    labels: tuple = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.adj)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NetworkFormatError(f"adjacency matrix must be square, got shape {a.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise NetworkFormatError("adjacency entries must be 0 or 1")
        if np.any(np.diag(a) != 0):
            raise NetworkFormatError("loops are not allowed (non-zero diagonal)")
        if not self.directed and not np.array_equal(a, a.T):
            raise NetworkFormatError("undirected network requires a symmetric matrix")
        object.__setattr__(self, "adj", _frozen(a, np.int8))
        object.__setattr__(self, "directed", bool(self.directed))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != a.shape[0]:
                raise NetworkFormatError("label count does not match matrix size")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.adj.shape[0]

    @classmethod
    def empty(cls, n, directed=True):
        return cls(np.zeros((n, n), dtype=np.int8), directed)

    @classmethod
    def complete(cls, n, directed=True):
        return cls(1 - np.eye(n, dtype=np.int8), directed)

    def n_links(self):
        """Number of arcs (directed) or edges (undirected)."""
        total = int(self.adj.sum())
        return total if self.directed else total // 2

    def complement(self):
        return BinaryNetwork(1 - np.eye(self.n, dtype=np.int8) - self.adj, self.directed, self.labels)

    def permuted(self, order):
        """Network with units reordered so that new unit ``t`` is old unit ``order[t]``."""
        order = np.asarray(order)
        labels = None if self.labels is None else tuple(self.labels[o] for o in order)
        return BinaryNetwork(self.adj[np.ix_(order, order)], self.directed, labels)

    def __eq__(self, other):
        if not isinstance(other, BinaryNetwork):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.directed, self.adj.tobytes()))


def _median(values):
    # mean of the two central order statistics for even sizes
    return float(np.median(np.asarray(values, dtype=float)))


def binarize(counts):
    """Binarize an interaction-count network into an undirected network.

    Counts are summed over both directions of each dyad. A pair is linked
    when its summed count is strictly greater than half of the median
    summed count over all unordered pairs.
    """
    if not isinstance(counts, CountNetwork):
        counts = CountNetwork(counts)
    n = counts.n
    if n < 2:
        raise DimensionError("binarize needs at least two units")
    c = counts.counts
    sym = c + c.T
    iu = np.triu_indices(n, k=1)
    threshold = _median(sym[iu]) / 2.0
    adj = (sym > threshold).astype(np.int8)
    np.fill_diagonal(adj, 0)
    return BinaryNetwork(adj, directed=False, labels=counts.labels)


def symmetrize_union(net):
    """Undirected network with an edge wherever at least one arc exists."""
    a = np.maximum(net.adj, net.adj.T)
    return BinaryNetwork(a, directed=False, labels=net.labels)


def density(net):
    n = net.n
    if n < 2:
        raise DimensionError("density needs at least two units")
    possible = n * (n - 1) if net.directed else n * (n - 1) // 2
    return net.n_links() / possible


def degrees(net):
    """Return ``(in_degree, out_degree)`` arrays."""
    a = net.adj.astype(np.int64)
    return a.sum(axis=0), a.sum(axis=1)


# ---------------------------------------------------------------- I/O

def _read_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(x.strip() for x in r)]
    if not rows:
        raise NetworkFormatError("empty matrix file")
    labels = None

    def numeric(tok):
        try:
            float(tok)
            return True
        except ValueError:
            return False

    if not all(numeric(t.strip()) for t in rows[0]):
        labels = [t.strip() for t in rows[0]]
        rows = rows[1:]
    try:
        m = np.array([[float(t) for t in r] for r in rows])
    except ValueError as exc:
        raise NetworkFormatError(f"non-numeric matrix entry: {exc}") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NetworkFormatError(f"matrix must be square, got {len(rows)} rows")
    if labels is not None and len(labels) != m.shape[0]:
        # tolerate a leading blank corner cell
        if len(labels) == m.shape[0] + 1 and labels[0] == "":
            labels = labels[1:]
        else:
            raise NetworkFormatError("header length does not match matrix size")
    return m, labels


def read_counts_csv(path):
    m, labels = _read_matrix_csv(path)
    return CountNetwork(m, labels)


def read_network_csv(path, directed=None):
    """Read a 0/1 matrix CSV. Directedness is inferred from symmetry unless given."""
    m, labels = _read_matrix_csv(path)
    if directed is None:
        directed = not np.array_equal(m, m.T)
    return BinaryNetwork(m, directed, labels)


def write_matrix_csv(matrix, path, labels=None):
    m = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if labels is not None:
            w.writerow(labels)
        for row in m:
            w.writerow([int(x) for x in row])


def write_network_csv(net, path):
    write_matrix_csv(net.adj, path, net.labels)


def write_pajek(net, path):
    with open(path, "w") as fh:
        fh.write(f"*Vertices {net.n}\n")
        if net.labels is not None:
            for i, lab in enumerate(net.labels, 1):
                fh.write(f'{i} "{lab}"\n')
        if net.directed:
            fh.write("*Arcs\n")
            src, dst = np.nonzero(net.adj)
        else:
            fh.write("*Edges\n")
            src, dst = np.nonzero(np.triu(net.adj))
        for i, j in zip(src, dst):
            fh.write(f"{i + 1} {j + 1}\n")


_VERTEX_LINE = re.compile(r'^\s*(\d+)\s+"([^"]*)"')


def read_pajek(path):
    """Read a minimal Pajek file (``*Vertices``, ``*Arcs``, ``*Edges``).

    A file with only ``*Edges`` sections yields an undirected network;
    any ``*Arcs`` section makes it directed (edges are then stored both ways).
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    n = None
    labels = {}
    arcs, edges = [], []
    section = None
    for lineno, ln in enumerate(lines, 1):
        if not ln or ln.startswith("%"):
            continue
        if ln.startswith("*"):
            head = ln.split()
            key = head[0].lower()
            if key == "*vertices":
                try:
                    n = int(head[1])
                except (IndexError, ValueError):
                    raise NetworkFormatError(f"{path}:{lineno}: bad *Vertices line") from None
                section = "vertices"
            elif key in ("*arcs", "*edges"):
                section = key[1:]
            else:
                raise NetworkFormatError(f"{path}:{lineno}: unsupported section {head[0]}")
            continue
        if section == "vertices":
            m = _VERTEX_LINE.match(ln)
            if m:
                labels[int(m.group(1))] = m.group(2)
            continue
        parts = ln.split()
        try:
            i, j = int(parts[0]), int(parts[1])
        except (IndexError, ValueError):
            raise NetworkFormatError(f"{path}:{lineno}: bad link line {ln!r}") from None
        if section is None or n is None:
            raise NetworkFormatError(f"{path}:{lineno}: link before *Vertices")
        if not (1 <= i <= n and 1 <= j <= n):
            raise NetworkFormatError(f"{path}:{lineno}: endpoint out of range")
        if i == j:
            raise NetworkFormatError(f"{path}:{lineno}: loops are not allowed")
        (arcs if section == "arcs" else edges).append((i - 1, j - 1))
    if n is None:
        raise NetworkFormatError(f"{path}: missing *Vertices")
    adj = np.zeros((n, n), dtype=np.int8)
    for i, j in arcs:
        adj[i, j] = 1
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1
    lab = [labels.get(v, str(v)) for v in range(1, n + 1)] if labels else None
    directed = bool(arcs)
    return BinaryNetwork(adj, directed, lab)


def read_network(path, directed=None):
    """Read a network from CSV or Pajek (``.net``/``.paj``) by extension."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".net", ".paj", ".pajek"):
        return read_pajek(path)
    return read_network_csv(path, directed)
