"""Local mechanism statistics for a focal unit and the weighted score ``phi``.

The statistics are computed from the directed adjacency matrix:

* mutuality      -- does the alter already send a link to the focal unit
* popularity     -- the alter's in-degree
* assortativity  -- negative absolute in-degree difference to the focal unit
* transitivity   -- number of two-paths focal -> k -> alter
* osp            -- number of out-partners shared by focal and alter

Each statistic is min-max scaled over the candidate alters (all units but
the focal one). The self column is carried as NaN.
"""

from dataclasses import dataclass

import numpy as np

from .netcore import DimensionError

MECHANISMS = ("mutuality", "popularity", "assortativity", "transitivity", "osp")


@dataclass(frozen=True)
class MechanismWeights:
    mutuality: float
    popularity: float
    assortativity: float
    transitivity: float
    osp: float

    @classmethod
    def from_vector(cls, v):
        v = [float(x) for x in v]
        if len(v) != 5:
            raise ValueError(f"expected 5 mechanism weights, got {len(v)}")
        return cls(*v)

    def as_array(self):
        return np.array([self.mutuality, self.popularity, self.assortativity,
                         self.transitivity, self.osp], dtype=float)

    def scaled(self, c):
        return MechanismWeights.from_vector(self.as_array() * c)


@dataclass(frozen=True, eq=False)
class StatRow:
    focal: int
    raw: np.ndarray
    normalized: np.ndarray


def _check_focal(n, i):
    if not 0 <= i < n:
        raise IndexError(f"focal unit {i} out of range for n={n}")


def raw_stats(net, i):
    """Raw statistics of unit ``i`` against every alter, shape ``(5, n)``.

    Column ``i`` is NaN.
    """
    a = np.asarray(net.adj if hasattr(net, "adj") else net, dtype=np.int64)
    n = a.shape[0]
    _check_focal(n, i)
    indeg = a.sum(axis=0)
    out = a[i]
    s = np.empty((5, n), dtype=float)
    s[0] = a[:, i]
    s[1] = indeg
    s[2] = -np.abs(indeg[i] - indeg)
    # k = i and k = j terms vanish since the diagonal is zero
    s[3] = out @ a
    s[4] = a @ out
    s[:, i] = np.nan
    return s


def normalize(row):
    """Min-max scale a row to [0, 1]; a constant row maps to zeros.

    NaN entries (the excluded self column) are ignored and kept as NaN.
    """
    row = np.asarray(row, dtype=float)
    valid = ~np.isnan(row)
    if valid.sum() < 2:
        raise DimensionError("normalization needs at least two candidates")
    lo = row[valid].min()
    hi = row[valid].max()
    if hi == lo:
        out = np.zeros_like(row)
    else:
        out = (row - lo) / (hi - lo)
    out[~valid] = np.nan
    return out


def stat_row(net, i):
    raw = raw_stats(net, i)
    norm = np.vstack([normalize(r) for r in raw])
    return StatRow(i, raw, norm)


def phi(net, i, theta):
    """Weighted mechanism score of every alter for focal unit ``i``.

    Returns a length-``n`` array with NaN at position ``i``.
    """
    if isinstance(theta, MechanismWeights):
        theta = theta.as_array()
    theta = np.asarray(theta, dtype=float)
    norm = stat_row(net, i).normalized
    # accumulate in a fixed order so results match the compiled generator bit for bit
    out = theta[0] * norm[0]
    for m in range(1, 5):
        out = out + theta[m] * norm[m]
    return out


def quantile_linear(values, p):
    """Quantile by linear interpolation between order statistics."""
    v = np.sort(np.asarray(values, dtype=float))
    pos = p * (len(v) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(v) - 1)
    frac = pos - lo
    return v[lo] + frac * (v[hi] - v[lo])


def candidate_sets(net, i, theta):
    """Return ``(C, F)``: alters at or above the upper quartile of ``phi``
    and alters at or below the lower quartile."""
    f = phi(net, i, theta)
    alters = np.flatnonzero(np.arange(len(f)) != i)
    vals = f[alters]
    q1 = quantile_linear(vals, 0.25)
    q3 = quantile_linear(vals, 0.75)
    return alters[vals >= q3], alters[vals <= q1]
