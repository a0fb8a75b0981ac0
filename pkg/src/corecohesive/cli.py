"""Command-line interface: ``corecohesive <subcommand> ...``."""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .blockmodel import BlockImage, Partition, evaluate, fit
from .fitmetrics import IdealType, ideal_image, inconsistent_blocks, relative_fit
from .harness import (parse_fraction, parse_int_list, parse_keyvalue, parse_thetas,
                      read_config, read_records, report, run_experiment)
from .mechanisms import MechanismWeights
from .nemgen import (DEFAULT_ITERATIONS, REFERENCE_CHECKPOINTS, GeneratorConfig,
                     checkpoint_schedule, dump_snapshots, generate, sample_theta)
from .netcore import binarize, density, read_counts_csv, read_network, write_matrix_csv
from .plotting import plot_blockmodel, write_pbm

log = logging.getLogger("corecohesive")


class UsageError(Exception):
    pass


def _emit(obj, args, csv_rows=None):
    """Write ``obj`` as JSON, or ``csv_rows`` as CSV, to --out or stdout."""
    fmt = args.format or "json"
    out = args.out
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        if fmt == "json":
            json.dump(obj, fh, indent=2)
            fh.write("\n")
        else:
            w = csv.writer(fh)
            for row in csv_rows if csv_rows is not None else obj.items():
                w.writerow(row)
    finally:
        if out:
            fh.close()


def _parse_image(spec):
    """Image from ``com,null;null,com`` text, a CSV file of types, or a fit JSON."""
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
        if spec.endswith(".json"):
            return BlockImage.from_strings(json.loads(text)["image"])
        rows = [r for r in csv.reader(text.splitlines()) if r]
        return BlockImage.from_strings(rows)
    return BlockImage.from_strings([r.split(",") for r in spec.split(";") if r.strip()])


def _parse_partition(spec, n):
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
        if spec.endswith(".json"):
            labels = json.loads(text)["partition"]
        else:
            labels = [int(x) for x in text.replace("\n", ",").split(",") if x.strip()]
    else:
        labels = [int(x) for x in spec.split(",") if x.strip()]
    if len(labels) != n:
        raise UsageError(f"partition has {len(labels)} labels, network has {n} units")
    return Partition(labels)


def _theta(args, rng):
    if args.theta:
        return MechanismWeights.from_vector(parse_thetas(args.theta)[0])
    return sample_theta(rng)


# ------------------------------------------------------------ subcommands

def cmd_gen(args):
    settings = {}
    if args.config:
        with open(args.config) as fh:
            settings = parse_keyvalue(fh.read(), args.config)
        allowed = {"q", "k", "iterations", "n", "seed", "theta", "schedule"}
        unknown = set(settings) - allowed
        if unknown:
            raise UsageError(f"{args.config}: unknown keys {sorted(unknown)}")
    q = parse_fraction(args.q or settings.get("q", "5/9"))
    k = int(args.iterations or settings.get("iterations", settings.get("k", DEFAULT_ITERATIONS)))
    n = int(args.n or settings.get("n", 24))
    seed = args.seed if args.seed is not None else int(settings.get("seed", 0))
    if args.theta is None and "theta" in settings:
        args.theta = settings["theta"]
    sched_text = args.schedule or settings.get("schedule")
    if sched_text:
        sched = checkpoint_schedule(total=k, points=parse_int_list(sched_text))
    elif k == DEFAULT_ITERATIONS:
        sched = checkpoint_schedule(total=k, points=REFERENCE_CHECKPOINTS)
    else:
        sched = checkpoint_schedule(100, 1.9, k)
    rng = np.random.default_rng(seed)
    theta = _theta(args, rng)
    traj = generate(GeneratorConfig(q, k, n, seed), theta, sched)
    outdir = args.out or "snapshots"
    paths = dump_snapshots(traj.snapshots, outdir, args.theta_id, args.rep)
    rows = [("iter", "arcs", "density", "file")]
    for (it, net), path in zip(traj.snapshots, paths):
        rows.append((it, net.n_links(), repr(density(net)), path))
    w = csv.writer(sys.stdout)
    for row in rows:
        w.writerow(row)
    log.info("theta = %s", theta.as_array().round(4).tolist())
    return 0


def cmd_fit(args):
    net = read_network(args.network)
    image = None
    k = args.k
    if args.image:
        image = _parse_image(args.image)
    elif args.ideal:
        image = ideal_image(IdealType.parse(args.ideal, k))
    if image is not None:
        k = image.k
    result = fit(net, k, args.restarts, image, np.random.default_rng(args.seed))
    d = result.to_dict()
    d["model"] = "specified" if image is not None else "non-specified"
    rows = [("unit", "cluster")] + [(i, c) for i, c in enumerate(d["partition"])]
    _emit(d, args, rows)
    if args.plot:
        plot_blockmodel(net, result.partition, args.plot)
    return 0


def cmd_rf(args):
    net = read_network(args.network)
    ideal = IdealType.parse(args.type, args.k)
    rep = relative_fit(net, ideal, args.k_rand, args.restarts, args.seed)
    d = rep.to_dict()
    _emit(d, args, [("field", "value"), ("ideal_type", d["ideal_type"]), ("k", d["k"]),
                    ("P_m", d["P_m"]), ("mean_P_r", float(np.mean(d["P_r"]))),
                    ("rf", "" if d["rf"] is None else d["rf"]), ("k_rand", d["k_rand"])])
    return 0


def cmd_inconsistent(args):
    observed = _parse_image(args.observed)
    if args.ideal_type:
        ideal = ideal_image(IdealType.parse(args.ideal_type, observed.k))
    elif args.ideal:
        ideal = _parse_image(args.ideal)
    else:
        raise UsageError("give a second image or --ideal-type")
    value = inconsistent_blocks(observed, ideal)
    _emit({"inconsistent_blocks": value, "k": observed.k}, args,
          [("inconsistent_blocks",), (value,)])
    return 0


def cmd_simulate(args):
    config = read_config(args.config, seed=None if args.seed is None else str(args.seed),
                         out=args.out)
    records = run_experiment(config)
    if config.plots or args.format:
        report(records, config.out, args.format or "csv", plots=config.plots)
    print(os.path.join(config.out, "records.csv"))
    return 0


def cmd_summarize(args):
    records = []
    for path in args.records:
        records.extend(read_records(path))
    outdir = args.out or os.path.dirname(os.path.abspath(args.records[0]))
    _, paths = report(records, outdir, args.format or "csv", plots=not args.no_plots)
    for p in paths:
        print(p)
    return 0


def cmd_plot(args):
    net = read_network(args.network)
    partition = _parse_partition(args.partition, net.n)
    prefix = args.out or os.path.splitext(args.network)[0] + "_blocks"
    written = [write_pbm(net, partition, prefix + ".pbm", args.cell),
               plot_blockmodel(net, partition, prefix + ".svg")]
    if args.png:
        written.append(plot_blockmodel(net, partition, prefix + ".png"))
    for p in written:
        print(p)
    return 0


def cmd_ingest(args):
    counts = read_counts_csv(args.counts)
    net = binarize(counts)
    if args.out:
        write_matrix_csv(net.adj, args.out, net.labels)
    else:
        w = csv.writer(sys.stdout)
        if net.labels is not None:
            w.writerow(net.labels)
        for row in net.adj:
            w.writerow([int(x) for x in row])
    return 0


# ------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="corecohesive", description="Blockmodel networks, generate them from local mechanisms, and score their fit to core-cohesive structure.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--out", default=None, help="output file or directory")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("-v", "--verbose", action="store_true", default=False)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("gen", parents=[common], help="generate one trajectory, dump snapshots")
    g.add_argument("--config", help="key = value file (q, iterations, n, seed, theta, schedule)")
    g.add_argument("--q")
    g.add_argument("--iterations", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--theta", help="five comma-separated weights; random if omitted")
    g.add_argument("--schedule", help="comma-separated checkpoint iterations")
    g.add_argument("--theta-id", default="0")
    g.add_argument("--rep", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", parents=[common], help="blockmodel a network file")
    f.add_argument("network")
    f.add_argument("--k", type=int, default=3)
    f.add_argument("--restarts", type=int, default=500)
    f.add_argument("--image", help="prescribed image, e.g. 'com,com;com,null', or a file")
    f.add_argument("--ideal", help="prescribed ideal type instead of --image")
    f.add_argument("--plot", help="also draw the permuted matrix to this file")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("rf", parents=[common], help="relative fit to an ideal type")
    r.add_argument("network")
    r.add_argument("--type", default="core_cohesive",
                   help="core_cohesive | cohesive | core_periphery")
    r.add_argument("--k", type=int)
    r.add_argument("--k-rand", type=int, default=20)
    r.add_argument("--restarts", type=int, default=100)
    r.set_defaults(func=cmd_rf)

    c = sub.add_parser("inconsistent", parents=[common], help="compare two block images")
    c.add_argument("observed")
    c.add_argument("ideal", nargs="?")
    c.add_argument("--ideal-type")
    c.set_defaults(func=cmd_inconsistent)

    s = sub.add_parser("simulate", parents=[common], help="run an experiment from a config file")
    s.add_argument("config")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("summarize", parents=[common], help="aggregate record files")
    m.add_argument("records", nargs="+")
    m.add_argument("--no-plots", action="store_true")
    m.set_defaults(func=cmd_summarize)

    pl = sub.add_parser("plot", parents=[common], help="permuted-matrix image (PBM + SVG)")
    pl.add_argument("network")
    pl.add_argument("--partition", required=True,
                    help="comma-separated labels, a labels file, or a fit JSON")
    pl.add_argument("--cell", type=int, default=4, help="PBM pixels per unit")
    pl.add_argument("--png", action="store_true")
    pl.set_defaults(func=cmd_plot)

    i = sub.add_parser("ingest", parents=[common], help="binarize a counts CSV")
    i.add_argument("counts")
    i.set_defaults(func=cmd_ingest)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, UsageError) as exc:
        print(f"corecohesive {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
