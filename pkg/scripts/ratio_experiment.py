"""Empirical rounding ratios against the exact optimum and the guaranteed fraction.

For each instance: exact rho ordering, LP optimum, brute-force optimum, and the
mean single-trial value of the rounding pipeline.  The last column is
``mean / (OPT / guarantee)``; values >= 1 mean the guarantee holds empirically.
"""

import argparse
import csv
import math
import sys

import numpy as np

from spectrum_auction.graph import exact_rho
from spectrum_auction.instance import build_model, generate
from spectrum_auction.lp import build_lp, solve_explicit
from spectrum_auction.rounding import RandomStream, guarantee_factor, round_once
from spectrum_auction.valuations import brute_force_opt


def run(model: str, n: int, k: int, seed: int, trials: int) -> list:
    inst = generate(model, n, k, seed)
    m = build_model(inst)
    m.ordering = exact_rho(m.graph)
    auction = inst.auction()
    x = solve_explicit(build_lp(auction, m.graph, m.ordering))
    _, opt = brute_force_opt(auction, m.graph)
    values = [float(round_once(x, auction, m.graph, m.ordering, r).value) for r in RandomStream(seed).spawn(trials)]
    mean = float(np.mean(values))
    guarantee = guarantee_factor(m.graph, m.ordering, k)
    target = float(opt) / guarantee
    return [model, n, k, seed, float(m.ordering.rho), x.objective, float(opt), mean, guarantee,
            mean / target if target > 0 else math.nan]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--models", nargs="+", default=["explicit-unweighted", "explicit-weighted", "disk"])
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--trials", type=int, default=1000)
    args = p.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["model", "n", "k", "seed", "rho", "lp", "opt", "mean_value", "guarantee", "slack"])
    for model in args.models:
        for seed in range(args.seeds):
            w.writerow(run(model, args.n, args.k, seed, args.trials))
    return 0


if __name__ == "__main__":
    sys.exit(main())
