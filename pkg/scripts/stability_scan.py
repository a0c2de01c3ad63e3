#!/usr/bin/env python3
"""Scan the central intensity and print the largest real part on V-perp.

Writes one CSV row per (N, gamma) with the classification, the relative real
part and the eigenvector condition number, so the stable window can be
compared with the closed-form interval.
"""

import argparse
import csv
import sys

import numpy as np

from vclab import build_crystal, cabral_schmidt_range
from vclab.stability import DegenerateSplittingError, restricted_spectrum


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[4, 5, 6, 7, 8])
    p.add_argument("--gamma-min", type=float, default=-4.0)
    p.add_argument("--gamma-max", type=float, default=12.0)
    p.add_argument("--points", type=int, default=321)
    p.add_argument("--csv", default="-")
    args = p.parse_args(argv)

    out = sys.stdout if args.csv == "-" else open(args.csv, "w", newline="")
    w = csv.writer(out)
    w.writerow(["n", "gamma", "lo", "hi", "classification", "max_real_part", "eigvec_condition"])
    for n in args.n:
        lo, hi = cabral_schmidt_range(n)
        for g in np.linspace(args.gamma_min, args.gamma_max, args.points).tolist():
            if g == 0.0:
                continue
            try:
                rep = restricted_spectrum(build_crystal(n, g))
            except DegenerateSplittingError:
                w.writerow([n, repr(g), float(lo), float(hi), "split-degenerate", "", ""])
                continue
            w.writerow([n, repr(g), float(lo), float(hi), rep.classification, repr(rep.max_real_part),
                        repr(rep.eigvec_condition)])
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
