"""Figures: permuted adjacency matrices and experiment reports.

Everything draws on explicit ``Figure`` objects, so no GUI backend or
pyplot state is involved. Output format follows the file extension.
"""

import math

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure
from matplotlib.ticker import FixedLocator

from .blockmodel import Partition
from .fitmetrics import IDEAL_TYPES

STYLE = {
    "font.size": 9,
    "axes.linewidth": 0.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "xtick.major.width": 0.6,
    "ytick.major.width": 0.6,
    "savefig.dpi": 200,
}

TYPE_LABELS = {
    "core_cohesive": "symmetric core-cohesive",
    "cohesive": "cohesive",
    "core_periphery": "symmetric core-periphery",
}


def _boundaries(partition):
    # order() sorts units by label, so clusters appear as 0..k-1
    return np.cumsum(partition.sizes())[:-1]


def _permuted(net, partition):
    if not isinstance(partition, Partition):
        partition = Partition(partition)
    order = partition.order()
    return np.asarray(net.adj)[np.ix_(order, order)], partition


def plot_blockmodel(net, partition, path, title=None, size=4.0):
    """Draw the adjacency matrix ordered by cluster, with divider lines."""
    a, partition = _permuted(net, partition)
    n = a.shape[0]
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(size, size))
        ax = fig.add_subplot(111)
        ax.imshow(a, cmap="Greys", vmin=0, vmax=1, interpolation="nearest")
        for b in _boundaries(partition):
            ax.axhline(b - 0.5, color="black", linewidth=1.2)
            ax.axvline(b - 0.5, color="black", linewidth=1.2)
        ax.set_xticks([])
        ax.set_yticks([])
        for side in ("top", "right", "bottom", "left"):
            ax.spines[side].set_visible(True)
        ax.set_xlim(-0.5, n - 0.5)
        ax.set_ylim(n - 0.5, -0.5)
        if title:
            ax.set_title(title)
        fig.savefig(path, bbox_inches="tight")
    return path


def pbm_lines(net, partition, cell=4):
    """Rows of a plain (P1) bitmap: 1 = black = link, with 1-pixel dividers."""
    a, partition = _permuted(net, partition)
    n = a.shape[0]
    cuts = set(int(b) for b in _boundaries(partition))
    # pixel columns: each unit spans `cell` pixels, a divider pixel precedes each cut
    spans = []
    for u in range(n):
        if u in cuts:
            spans.append(None)
        spans.extend([u] * cell)
    rows = []
    for r in spans:
        if r is None:
            rows.append([1] * len(spans))
            continue
        rows.append([1 if c is None else int(a[r, c]) for c in spans])
    return rows


def write_pbm(net, partition, path, cell=4):
    rows = pbm_lines(net, partition, cell)
    with open(path, "w") as fh:
        fh.write("P1\n")
        fh.write(f"{len(rows[0])} {len(rows)}\n")
        for row in rows:
            fh.write(" ".join(str(x) for x in row) + "\n")
    return path


def plot_inconsistent_trajectories(summary, path, max_lines=12):
    """Mean inconsistent blocks against iterations, one line per theta."""
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(5.0, 3.2))
        ax = fig.add_subplot(111)
        by_theta = {}
        for (tid, it), agg in sorted(summary.by_checkpoint.items()):
            by_theta.setdefault(tid, []).append((it, agg["mean_inconsistent_blocks"]))
        # lowest final values first: those are the interesting ones
        order = sorted(by_theta, key=lambda t: by_theta[t][-1][1])[:max_lines]
        for tid in order:
            its, vals = zip(*by_theta[tid])
            ax.plot(its, vals, marker="o", markersize=2.5, linewidth=0.9, label=f"theta {tid}")
        ax.set_xscale("log")
        ax.set_xlabel("iterations")
        ax.set_ylabel("mean inconsistent blocks")
        ax.set_ylim(bottom=0)
        if order:
            ax.legend(fontsize=6, frameon=False, ncol=2)
        fig.savefig(path, bbox_inches="tight")
    return path


def plot_rf_density(records, theta_id, path):
    """Mean RF per ideal type (lines) over density boxplots, for one theta."""
    recs = [r for r in records if r.theta_id == theta_id]
    its = sorted({r.iteration for r in recs})
    pos = np.arange(len(its))
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(6.0, 3.4))
        ax = fig.add_subplot(111)
        dens = [[r.density for r in recs if r.iteration == it] for it in its]
        ax.boxplot(dens, positions=pos, widths=0.5, showfliers=False,
                   medianprops={"color": "0.4"}, boxprops={"color": "0.6"},
                   whiskerprops={"color": "0.6"}, capprops={"color": "0.6"})
        for t in IDEAL_TYPES:
            xs, ys = [], []
            for x, it in zip(pos, its):
                vals = [r.rf[t] for r in recs if r.iteration == it
                        and r.rf.get(t) is not None and not math.isnan(r.rf[t])]
                if vals:
                    xs.append(x)
                    ys.append(float(np.mean(vals)))
            if xs:
                ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.0, label=TYPE_LABELS[t])
        ax.axhline(0.0, color="0.7", linewidth=0.5)
        ax.xaxis.set_major_locator(FixedLocator(pos))
        ax.set_xticklabels([f"{it:,}" for it in its], rotation=90)
        ax.set_xlabel("iterations")
        ax.set_ylabel("mean RF / density")
        ax.set_title(f"theta {theta_id}")
        ax.legend(fontsize=7, frameon=False)
        fig.savefig(path, bbox_inches="tight")
    return path
