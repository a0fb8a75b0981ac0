"""Monte Carlo experiment: generate trajectories, blockmodel the checkpoints,
persist one record per (theta, repetition, checkpoint), and aggregate.
"""

import csv
import dataclasses
import json
import logging
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .blockmodel import fit
from .fitmetrics import (CORE_COHESIVE, COHESIVE, CORE_PERIPHERY, IDEAL_TYPES,
                         IdealType, ideal_image, inconsistent_blocks, relative_fit)
from .mechanisms import MechanismWeights
from .nemgen import (DEFAULT_ITERATIONS, REFERENCE_CHECKPOINTS, CheckpointSchedule,
                     ConfigError, GeneratorConfig, checkpoint_schedule, dump_snapshots,
                     generate, sample_theta)
from .netcore import density, symmetrize_union

log = logging.getLogger(__name__)

RECORD_COLUMNS = ("theta_id", "rep", "iter", "density", "inconsistent_blocks",
                  "rf_core_cohesive", "rf_cohesive", "rf_core_periphery")


# ------------------------------------------------------------ config files

def parse_keyvalue(text, source="<config>"):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_fraction(s):
    return float(Fraction(s.strip()))


def parse_bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def parse_int_list(s):
    s = s.strip()
    return tuple(int(x) for x in s.replace(";", ",").split(",") if x.strip()) if s else ()


def parse_thetas(s):
    """``a,b,c,d,e; a,b,c,d,e`` -> tuple of 5-tuples."""
    out = []
    for chunk in s.split(";"):
        if not chunk.strip():
            continue
        vals = tuple(float(x) for x in chunk.replace(" ", ",").split(",") if x.strip())
        if len(vals) != 5:
            raise ConfigError(f"theta needs 5 components, got {len(vals)}: {chunk!r}")
        out.append(vals)
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    n_thetas: int = 30
    reps_per_theta: int = 10
    n_units: int = 24
    q: float = 5 / 9
    total_iterations: int = DEFAULT_ITERATIONS
    schedule: tuple = None
    schedule_m1: int = 100
    schedule_growth: float = 1.9
    restarts: int = 100
    k_clusters: int = 3
    k_rand: int = 20
    rf_restarts: int = None
    rf_final: bool = True
    rf_trajectory_thetas: tuple = ()
    thetas: tuple = None
    seed: int = 0
    out: str = "results"
    save_snapshots: bool = False
    plots: bool = True
    workers: int = 1

    def __post_init__(self):
        for name in ("n_thetas", "reps_per_theta", "n_units", "total_iterations",
                     "restarts", "k_clusters", "k_rand", "workers", "schedule_m1"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 <= self.q <= 1.0:
            raise ConfigError(f"q must lie in [0, 1], got {self.q}")
        if self.k_clusters < 3:
            raise ConfigError("k_clusters must be >= 3 for the core-cohesive comparison")
        if self.thetas is not None:
            object.__setattr__(self, "thetas", tuple(tuple(float(x) for x in t) for t in self.thetas))
        # validates ordering and the upper bound
        self.checkpoints()

    def checkpoints(self):
        if self.schedule:
            return checkpoint_schedule(total=self.total_iterations, points=self.schedule)
        if (self.total_iterations == DEFAULT_ITERATIONS and self.schedule_m1 == 100
                and self.schedule_growth == 1.9):
            return CheckpointSchedule(REFERENCE_CHECKPOINTS)
        return checkpoint_schedule(self.schedule_m1, self.schedule_growth, self.total_iterations)

    @property
    def theta_count(self):
        return len(self.thetas) if self.thetas is not None else self.n_thetas

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["checkpoints"] = list(self.checkpoints())
        return d


_PARSERS = {
    "n_thetas": int, "reps_per_theta": int, "n_units": int, "q": parse_fraction,
    "total_iterations": int, "schedule": parse_int_list, "schedule_m1": int,
    "schedule_growth": float, "restarts": int, "k_clusters": int, "k_rand": int,
    "rf_restarts": int, "rf_final": parse_bool, "rf_trajectory_thetas": parse_int_list,
    "thetas": parse_thetas, "seed": int, "out": str, "save_snapshots": parse_bool,
    "plots": parse_bool, "workers": int,
}


def config_from_mapping(mapping, source="<config>"):
    kwargs = {}
    for key, value in mapping.items():
        if key not in _PARSERS:
            raise ConfigError(f"{source}: unknown key {key!r}")
        try:
            kwargs[key] = _PARSERS[key](value) if isinstance(value, str) else value
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from None
    return ExperimentConfig(**kwargs)


def read_config(path, **overrides):
    with open(path) as fh:
        mapping = parse_keyvalue(fh.read(), source=str(path))
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(mapping, source=str(path))


# ------------------------------------------------------------ records

@dataclass(frozen=True)
class SimulationRecord:
    theta_id: int
    rep: int
    iteration: int
    density: float
    inconsistent_blocks: int
    rf: dict = field(default_factory=dict)
    theta: tuple = None

    def row(self):
        def fmt(x):
            if x is None:
                return ""
            return "nan" if math.isnan(x) else repr(float(x))
        return [self.theta_id, self.rep, self.iteration, repr(float(self.density)),
                self.inconsistent_blocks] + [fmt(self.rf.get(t)) for t in IDEAL_TYPES]


def _trajectory_seed(master, theta_id, rep):
    return np.random.SeedSequence([int(master), int(theta_id), int(rep)])


def _child(seq, *key):
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + key)


def experiment_thetas(config):
    """Thetas of the experiment as ``[(theta_id, MechanismWeights), ...]``."""
    if config.thetas is not None:
        return [(i, MechanismWeights.from_vector(t)) for i, t in enumerate(config.thetas)]
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 2**31 - 1]))
    return [(i, sample_theta(rng)) for i in range(config.n_thetas)]


def ideal_types(config):
    k = config.k_clusters
    return {CORE_COHESIVE: IdealType.core_cohesive(k), COHESIVE: IdealType.cohesive(k),
            CORE_PERIPHERY: IdealType.core_periphery()}


def run_trajectory(config, theta_id, theta, rep):
    """Records for one (theta, repetition) trajectory."""
    seq = _trajectory_seed(config.seed, theta_id, rep)
    sched = config.checkpoints()
    gcfg = GeneratorConfig(config.q, config.total_iterations, config.n_units, _child(seq, 0))
    traj = generate(gcfg, theta, sched)
    if config.save_snapshots:
        dump_snapshots(traj.snapshots, os.path.join(config.out, "snapshots"), theta_id, rep)
    cc_image = ideal_image(IdealType.core_cohesive(config.k_clusters))
    types = ideal_types(config)
    rf_restarts = config.rf_restarts or config.restarts
    full_rf = theta_id in config.rf_trajectory_thetas
    records = []
    for idx, (it, net) in enumerate(traj.snapshots):
        und = symmetrize_union(net)
        f = fit(und, config.k_clusters, config.restarts, None,
                np.random.default_rng(_child(seq, 1, idx)))
        rf = {}
        if full_rf or (config.rf_final and idx == len(traj.snapshots) - 1):
            for t_idx, name in enumerate(IDEAL_TYPES):
                rep_ = relative_fit(und, types[name], config.k_rand, rf_restarts,
                                    _child(seq, 2, idx, t_idx))
                rf[name] = rep_.rf
        records.append(SimulationRecord(theta_id, rep, it, density(und),
                                        inconsistent_blocks(f.image, cc_image), rf,
                                        tuple(theta.as_array().tolist())))
    return records


def _work(args):
    config, theta_id, theta, rep = args
    try:
        return theta_id, rep, run_trajectory(config, theta_id, theta, rep), None
    except Exception as exc:  # recorded, the run continues
        log.exception("trajectory theta=%s rep=%s failed", theta_id, rep)
        return theta_id, rep, [], f"{type(exc).__name__}: {exc}"


def iter_records(config, failures=None):
    """Yield records in (theta, repetition, checkpoint) order."""
    jobs = [(config, tid, th, rep) for tid, th in experiment_thetas(config)
            for rep in range(config.reps_per_theta)]
    if config.workers > 1:
        pool = ProcessPoolExecutor(config.workers)
        results = pool.map(_work, jobs)
    else:
        pool = None
        results = map(_work, jobs)
    try:
        for theta_id, rep, recs, err in results:
            if err is not None and failures is not None:
                failures.append({"theta_id": theta_id, "rep": rep, "error": err})
            yield from recs
    finally:
        if pool is not None:
            pool.shutdown()


def _versions():
    import numba
    return {"corecohesive": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "numba": numba.__version__}


def run_experiment(config):
    """Run the experiment, writing ``records.csv`` and ``manifest.json`` to ``config.out``.

    Returns the list of records.
    """
    os.makedirs(config.out, exist_ok=True)
    rec_path = os.path.join(config.out, "records.csv")
    thetas = experiment_thetas(config)
    failures = []
    records = []
    with open(rec_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for rec in iter_records(config, failures):
            w.writerow(rec.row())
            records.append(rec)
            fh.flush()
    manifest = {
        "config": config.to_dict(),
        "thetas": {str(i): t.as_array().tolist() for i, t in thetas},
        "seeding": "per trajectory SeedSequence([seed, theta_id, rep])",
        "versions": _versions(),
        "records": len(records),
        "failures": failures,
    }
    with open(os.path.join(config.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    log.info("wrote %d records to %s", len(records), rec_path)
    return records


def read_records(path):
    def num(s):
        return None if s == "" else float(s)

    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            rf = {t: num(row[f"rf_{t}"]) for t in IDEAL_TYPES if row[f"rf_{t}"] != ""}
            records.append(SimulationRecord(int(row["theta_id"]), int(row["rep"]),
                                            int(row["iter"]), float(row["density"]),
                                            int(row["inconsistent_blocks"]), rf))
    return records


def write_records(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for rec in records:
            w.writerow(rec.row())


# ------------------------------------------------------------ aggregation

def _mean(values):
    values = list(values)
    return math.fsum(values) / len(values) if values else None


@dataclass
class Summary:
    """``by_checkpoint`` rows are keyed by (theta_id, iteration); ``mrf`` by theta_id."""

    by_checkpoint: dict
    mrf: dict
    final_iteration: dict

    def checkpoint_rows(self):
        rows = []
        for (tid, it), agg in sorted(self.by_checkpoint.items()):
            rows.append({"theta_id": tid, "iter": it, **agg})
        return rows

    def mrf_rows(self):
        return [{"theta_id": tid, "final_iter": self.final_iteration[tid], **{
            f"mrf_{t}": v for t, v in m.items()}} for tid, m in sorted(self.mrf.items())]

    def to_dict(self):
        return {"checkpoints": self.checkpoint_rows(), "mrf": self.mrf_rows()}


def summarize(records):
    """Aggregate records over repetitions.

    Per (theta, checkpoint): mean inconsistent blocks, mean density and mean
    RF per ideal type (over records where it was computed and defined). Per
    theta: mean RF at the final checkpoint (MRF).
    """
    groups = {}
    for r in records:
        groups.setdefault((r.theta_id, r.iteration), []).append(r)
    by_cp = {}
    for key, rs in groups.items():
        agg = {"n": len(rs),
               "mean_inconsistent_blocks": _mean(r.inconsistent_blocks for r in rs),
               "mean_density": _mean(r.density for r in rs)}
        for t in IDEAL_TYPES:
            vals = [r.rf[t] for r in rs if r.rf.get(t) is not None and not math.isnan(r.rf[t])]
            agg[f"mean_rf_{t}"] = _mean(vals)
        by_cp[key] = agg
    final = {}
    for tid, it in by_cp:
        final[tid] = max(final.get(tid, it), it)
    mrf = {tid: {t: by_cp[(tid, it)][f"mean_rf_{t}"] for t in IDEAL_TYPES}
           for tid, it in final.items()}
    return Summary(by_cp, mrf, final)


def write_summary(summary, outdir, fmt="csv"):
    os.makedirs(outdir, exist_ok=True)
    if fmt == "json":
        path = os.path.join(outdir, "summary.json")
        with open(path, "w") as fh:
            json.dump(summary.to_dict(), fh, indent=2)
        return [path]
    paths = []
    for name, rows in (("summary.csv", summary.checkpoint_rows()), ("mrf.csv", summary.mrf_rows())):
        path = os.path.join(outdir, name)
        with open(path, "w", newline="") as fh:
            if rows:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                for row in rows:
                    w.writerow({k: ("" if v is None else v) for k, v in row.items()})
        paths.append(path)
    return paths


def report(records, outdir, fmt="csv", plots=True):
    """Summarize records and write tables plus figures to ``outdir``."""
    summary = summarize(records)
    paths = write_summary(summary, outdir, fmt)
    if plots and records:
        from .plotting import plot_inconsistent_trajectories, plot_rf_density
        paths.append(plot_inconsistent_trajectories(summary, os.path.join(outdir, "inconsistent_blocks.png")))
        with_rf = sorted({r.theta_id for r in records if r.rf})
        for tid in with_rf:
            paths.append(plot_rf_density(records, tid, os.path.join(outdir, f"rf_density_theta{tid}.png")))
    return summary, paths
