#!/usr/bin/env python3
"""Calibrate the constant C in sup|Z - Z*| <= C eps^(2 beta - 2 alpha).

Runs the forced near-equilibrium experiment on one crystal over a grid of eps
and forcing seeds and reports the largest observed ratio. The constant shipped
in ``vclab.dynamics.PERTURBATION_CONSTANT`` was frozen from one such run (N=5,
alpha=0.2, beta=0.45, seeds 0..9) and rounded up generously.
"""

import argparse
import json

import numpy as np

from vclab import build_crystal, run_perturbed_crystal
from vclab.dynamics import PERTURBATION_CONSTANT


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.45)
    p.add_argument("--eps", type=float, nargs="+", default=[1e-2, 3e-3, 1e-3])
    p.add_argument("--seeds", type=int, default=10)
    args = p.parse_args(argv)

    spec = build_crystal(args.n)
    rows = []
    for eps in args.eps:
        for seed in range(args.seeds):
            rep = run_perturbed_crystal(spec, eps, args.alpha, args.beta, seed)
            ratio = rep.max_deviation / eps ** (2 * args.beta - 2 * args.alpha)
            rows.append({"eps": eps, "seed": seed, "max_deviation": rep.max_deviation, "ratio": ratio,
                         "exit_time": rep.exit_time})
            print(f"eps={eps:<8g} seed={seed:<3d} sup dev={rep.max_deviation:.4g}  ratio={ratio:.4g}")
    worst = max(r["ratio"] for r in rows)
    print(json.dumps({"max_ratio": worst, "suggested_C": float(np.ceil(3 * worst)),
                      "frozen_C": PERTURBATION_CONSTANT}, indent=2))


if __name__ == "__main__":
    main()
