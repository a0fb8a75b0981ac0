"""Ideal blockmodel types, inconsistent blocks, and relative fit (RF)."""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .blockmodel import BlockImage, ModelError, fit
from .netcore import BinaryNetwork

CORE_COHESIVE = "core_cohesive"
COHESIVE = "cohesive"
CORE_PERIPHERY = "core_periphery"
IDEAL_TYPES = (CORE_COHESIVE, COHESIVE, CORE_PERIPHERY)

DEFAULT_K_RAND = 20


@dataclass(frozen=True)
class IdealType:
    name: str
    k: int

    def __post_init__(self):
        if self.name == CORE_COHESIVE and self.k < 3:
            raise ModelError("symmetric core-cohesive blockmodel needs k >= 3")
        if self.name == COHESIVE and self.k < 2:
            raise ModelError("cohesive blockmodel needs k >= 2")
        if self.name == CORE_PERIPHERY and self.k != 2:
            raise ModelError("symmetric core-periphery blockmodel has exactly k = 2")
        if self.name not in IDEAL_TYPES:
            raise ModelError(f"unknown ideal type {self.name!r}")

    @classmethod
    def core_cohesive(cls, k=3):
        return cls(CORE_COHESIVE, k)

    @classmethod
    def cohesive(cls, k=2):
        return cls(COHESIVE, k)

    @classmethod
    def core_periphery(cls):
        return cls(CORE_PERIPHERY, 2)

    @classmethod
    def parse(cls, name, k=None):
        name = name.replace("-", "_").lower()
        defaults = {CORE_COHESIVE: 3, COHESIVE: 2, CORE_PERIPHERY: 2}
        if name not in defaults:
            raise ModelError(f"unknown ideal type {name!r}; choose from {', '.join(IDEAL_TYPES)}")
        return cls(name, defaults[name] if k is None else int(k))


def ideal_image(t):
    """Block image of an ideal type. Cluster 0 is the core where there is one."""
    k = t.k
    if t.name == CORE_PERIPHERY:
        return BlockImage([[True, True], [True, False]])
    img = np.eye(k, dtype=bool)
    if t.name == CORE_COHESIVE:
        img[0, :] = True
        img[:, 0] = True
    return BlockImage(img)


def inconsistent_blocks(observed, ideal):
    """Fewest differing block types over all relabelings of ``observed``."""
    if observed.k != ideal.k:
        raise ModelError(f"image sizes differ: {observed.k} vs {ideal.k}")
    obs = observed.complete
    best = obs.size
    for perm in itertools.permutations(range(observed.k)):
        p = np.array(perm)
        diff = int(np.count_nonzero(obs[np.ix_(p, p)] != ideal.complete))
        best = min(best, diff)
        if best == 0:
            break
    return best


def randomize(net, rng):
    """Uniform random network with the same size, directedness and link count."""
    rng = np.random.default_rng(rng)
    n = net.n
    m = net.n_links()
    if net.directed:
        src, dst = np.nonzero(~np.eye(n, dtype=bool))
    else:
        src, dst = np.triu_indices(n, k=1)
    chosen = rng.choice(src.size, size=m, replace=False)
    adj = np.zeros((n, n), dtype=np.int8)
    adj[src[chosen], dst[chosen]] = 1
    if not net.directed:
        adj = adj | adj.T
    return BinaryNetwork(adj, net.directed)


@dataclass(frozen=True)
class RfReport:
    ideal: IdealType
    empirical: int
    baseline: tuple
    rf: float
    k_rand: int
    seeds: dict = field(default_factory=dict)

    @property
    def defined(self):
        return not math.isnan(self.rf)

    def to_dict(self):
        return {
            "ideal_type": self.ideal.name,
            "k": self.ideal.k,
            "P_m": int(self.empirical),
            "P_r": [int(x) for x in self.baseline],
            "rf": self.rf if self.defined else None,
            "k_rand": self.k_rand,
            "seeds": self.seeds,
        }


def rf_value(p_m, p_r):
    """RF from an empirical criterion and baseline criteria; NaN when undefined."""
    mean_r = float(np.mean(p_r))
    if mean_r == 0.0:
        return 1.0 if p_m == 0 else math.nan
    return 1.0 - p_m / mean_r


def relative_fit(net, ideal, k_rand=DEFAULT_K_RAND, restarts=100, rng=None):
    """Relative fit of ``net`` to a pre-specified ideal blockmodel.

    The empirical criterion and each baseline criterion come from separate
    pre-specified fits; baselines use independent density-matched random
    networks.
    """
    if k_rand < 1:
        raise ModelError("k_rand must be positive")
    if isinstance(rng, np.random.SeedSequence):
        seq = rng
    elif isinstance(rng, np.random.Generator):
        seq = np.random.SeedSequence(int(rng.integers(2**63)))
    else:
        seq = np.random.SeedSequence(rng)
    img = ideal_image(ideal)
    # children derived by key so the caller's SeedSequence is not mutated
    fit_seed, *rand_seeds = [
        np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + (c,))
        for c in range(1 + k_rand)
    ]
    p_m = fit(net, ideal.k, restarts, img, np.random.default_rng(fit_seed)).criterion
    p_r = []
    for s in rand_seeds:
        g = np.random.default_rng(s)
        rnet = randomize(net, g)
        p_r.append(fit(rnet, ideal.k, restarts, img, g).criterion)
    seeds = {"entropy": str(seq.entropy), "spawn_key": list(seq.spawn_key)}
    return RfReport(ideal, int(p_m), tuple(p_r), rf_value(p_m, p_r), k_rand, seeds)
