"""Network evolution model: mechanism-driven single-link updates.

Each iteration picks a focal unit, scores every alter with the weighted
mechanism statistics, and then either sends a link to a random alter from
the top quartile of scores (probability ``q``) or drops the link to a random
alter from the bottom quartile.

The per-step work runs in a compiled kernel. All randomness is drawn up
front from a ``numpy.random.Generator`` so a trajectory is fully determined
by its seed, independent of where snapshots are taken.
"""

import math
import os
from dataclasses import dataclass

import numpy as np
from numba import njit

from .mechanisms import MechanismWeights
from .netcore import BinaryNetwork, write_network_csv

REFERENCE_CHECKPOINTS = (100, 190, 361, 686, 1303, 2478, 4705, 8939,
                         16948, 32969, 61311, 116490)
DEFAULT_ITERATIONS = 116490
DEFAULT_Q = 5 / 9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    q: float
    k: int
    n: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ConfigError(f"q must lie in [0, 1], got {self.q}")
        if self.k < 1:
            raise ConfigError(f"iterations must be positive, got {self.k}")
        if self.n < 4:
            raise ConfigError(f"need at least 4 units, got {self.n}")


@dataclass(frozen=True)
class CheckpointSchedule:
    points: tuple

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        if any(p < 1 for p in pts):
            raise ConfigError("checkpoints must be positive iteration counts")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError(f"checkpoints must be strictly increasing: {pts}")
        object.__setattr__(self, "points", pts)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    @property
    def last(self):
        return self.points[-1] if self.points else 0


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def checkpoint_schedule(m1=100, growth=1.9, total=DEFAULT_ITERATIONS, points=None):
    """Geometric checkpoint schedule ``m_i = m_{i-1} * growth``.

    The product is carried unrounded and each point is rounded half-up, so
    ``m_i = round(m1 * growth**(i-1))``. Points stop at ``total``, which is
    appended if not already hit. An explicit ``points`` list overrides the
    geometric rule.
    """
    if points is not None:
        sched = CheckpointSchedule(tuple(points))
        if sched.last > total:
            raise ConfigError(f"checkpoint {sched.last} exceeds total iterations {total}")
        return sched
    if m1 < 1 or growth <= 1:
        raise ConfigError("need m1 >= 1 and growth > 1")
    pts = []
    x = float(m1)
    while True:
        p = _round_half_up(x)
        if p > total:
            break
        if not pts or p > pts[-1]:
            pts.append(p)
        x *= growth
    if not pts or pts[-1] != total:
        pts.append(int(total))
    return CheckpointSchedule(tuple(pts))


def theta_from_draw(draw):
    draw = np.asarray(draw, dtype=float)
    norm = math.sqrt(float(np.sum(draw * draw)))
    if norm == 0.0:
        raise ValueError("cannot normalize an all-zero draw")
    return MechanismWeights.from_vector(draw / norm)


def sample_theta(rng):
    """Mechanism weights uniform on the unit sphere in five dimensions."""
    while True:
        draw = rng.standard_normal(5)
        if np.any(draw != 0.0):
            return theta_from_draw(draw)


# ------------------------------------------------------------ kernels

@njit(cache=True)
def _phi_into(adj, indeg, i, theta, raw, out):
    n = adj.shape[0]
    for j in range(n):
        if j == i:
            continue
        raw[0, j] = adj[j, i]
        raw[1, j] = indeg[j]
        raw[2, j] = -abs(indeg[i] - indeg[j])
        t = 0
        o = 0
        for k in range(n):
            if adj[i, k] != 0:
                t += adj[k, j]
                o += adj[j, k]
        raw[3, j] = t
        raw[4, j] = o
    for j in range(n):
        out[j] = 0.0
    for m in range(5):
        lo = np.inf
        hi = -np.inf
        for j in range(n):
            if j == i:
                continue
            v = raw[m, j]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        span = hi - lo
        for j in range(n):
            if j == i:
                continue
            if span == 0.0:
                nv = 0.0
            else:
                nv = (raw[m, j] - lo) / span
            if m == 0:
                out[j] = theta[m] * nv
            else:
                out[j] = out[j] + theta[m] * nv


@njit(cache=True)
def _quartiles(phi, i, buf):
    n = phi.shape[0]
    c = 0
    for j in range(n):
        if j != i:
            buf[c] = phi[j]
            c += 1
    v = np.sort(buf[:c])
    pos1 = 0.25 * (c - 1)
    lo1 = int(np.floor(pos1))
    hi1 = min(lo1 + 1, c - 1)
    q1 = v[lo1] + (pos1 - lo1) * (v[hi1] - v[lo1])
    pos3 = 0.75 * (c - 1)
    lo3 = int(np.floor(pos3))
    hi3 = min(lo3 + 1, c - 1)
    q3 = v[lo3] + (pos3 - lo3) * (v[hi3] - v[lo3])
    return q1, q3


@njit(cache=True)
def _candidates(adj, indeg, i, theta, raw, phi, buf, upper, members):
    """Fill ``members`` with the upper (C) or lower (F) quartile set; return its size."""
    _phi_into(adj, indeg, i, theta, raw, phi)
    q1, q3 = _quartiles(phi, i, buf)
    c = 0
    for j in range(adj.shape[0]):
        if j == i:
            continue
        if upper:
            if phi[j] >= q3:
                members[c] = j
                c += 1
        elif phi[j] <= q1:
            members[c] = j
            c += 1
    return c


@njit(cache=True)
def _run_steps(adj, indeg, theta, q, focal, coin, pick, start, stop, target):
    n = adj.shape[0]
    raw = np.zeros((5, n))
    phi = np.zeros(n)
    buf = np.zeros(n)
    members = np.zeros(n, dtype=np.int64)
    for step in range(start, stop):
        i = focal[step]
        create = coin[step] < q
        c = _candidates(adj, indeg, i, theta, raw, phi, buf, create, members)
        idx = int(pick[step] * c)
        if idx >= c:
            idx = c - 1
        j = members[idx]
        target[step] = j
        if create:
            if adj[i, j] == 0:
                adj[i, j] = 1
                indeg[j] += 1
        else:
            if adj[i, j] != 0:
                adj[i, j] = 0
                indeg[j] -= 1


def _draws(rng, n, k):
    focal = rng.integers(0, n, size=k)
    coin = rng.random(k)
    pick = rng.random(k)
    return focal.astype(np.int64), coin, pick


def _theta_array(theta):
    if isinstance(theta, MechanismWeights):
        return theta.as_array()
    return np.asarray(theta, dtype=float)


def nem_step(net, theta, q, rng):
    """One model iteration on a directed network; returns a new network."""
    n = net.n
    if n < 4:
        raise ConfigError(f"need at least 4 units, got {n}")
    adj = np.array(net.adj, dtype=np.int8)
    indeg = adj.sum(axis=0).astype(np.int64)
    focal, coin, pick = _draws(rng, n, 1)
    target = np.zeros(1, dtype=np.int64)
    _run_steps(adj, indeg, _theta_array(theta), float(q), focal, coin, pick, 0, 1, target)
    return BinaryNetwork(adj, directed=True, labels=net.labels)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots ``[(iteration, network), ...]`` plus the final state.

    ``focal`` and ``target`` record each step's selected unit and alter.
    """

    snapshots: list
    final: BinaryNetwork
    focal: np.ndarray
    target: np.ndarray
    coin: np.ndarray


def generate(config, theta, schedule=None, initial=None):
    """Apply ``config.k`` iterations and snapshot the network at each checkpoint."""
    if schedule is None:
        schedule = CheckpointSchedule(())
    elif not isinstance(schedule, CheckpointSchedule):
        schedule = CheckpointSchedule(tuple(schedule))
    if schedule.last > config.k:
        raise ConfigError(f"checkpoint {schedule.last} exceeds iterations {config.k}")
    if initial is None:
        initial = BinaryNetwork.empty(config.n, directed=True)
    if initial.n != config.n:
        raise ConfigError(f"initial network has {initial.n} units, config says {config.n}")
    if not initial.directed:
        initial = BinaryNetwork(initial.adj, directed=True, labels=initial.labels)

    rng = np.random.default_rng(config.seed)
    focal, coin, pick = _draws(rng, config.n, config.k)
    adj = np.array(initial.adj, dtype=np.int8)
    indeg = adj.sum(axis=0).astype(np.int64)
    th = _theta_array(theta)
    target = np.zeros(config.k, dtype=np.int64)

    snaps = []
    done = 0
    for stop in list(schedule) + [config.k]:
        _run_steps(adj, indeg, th, float(config.q), focal, coin, pick, done, stop, target)
        done = stop
        if len(snaps) < len(schedule):
            snaps.append((stop, BinaryNetwork(adj, directed=True, labels=initial.labels)))
    final = BinaryNetwork(adj, directed=True, labels=initial.labels)
    return Trajectory(snaps, final, focal, target, coin)


def dump_snapshots(snapshots, outdir, theta_id, rep):
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for it, net in snapshots:
        path = os.path.join(outdir, f"{theta_id}_{rep}_{it}.csv")
        write_network_csv(net, path)
        paths.append(path)
    return paths
