#!/usr/bin/env python3
"""Particle runs around the N=4 crystal: stable, detuned and negative center.

Each run goes through the command line so the CSV and manifest land next to
each other in --out. Prints the confinement summary and the per-blob drift of
the second moment over t <= 10.
"""

import argparse
import contextlib
import csv
import io
import json
import pathlib

import numpy as np

from vclab.cli import main as vclab
from vclab.crystal import central_gamma_closed


def moment_drift(path, t_max=10.0):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    keys = [k for k in rows[0] if k.startswith("I_")]
    I = np.array([[float(r[k]) for k in keys] for r in rows])[t <= t_max + 1e-9]
    return np.max(np.abs(I - I[0]), axis=0) / I[0]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs")
    p.add_argument("--particles", type=int, default=400)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--method", default="tree")
    args = p.parse_args(argv)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cases = {"stable": None, "detuned": central_gamma_closed(4) + 1.0, "negative": -3.0}
    report = {}
    for name, gamma in cases.items():
        argv = ["blob", "--n", "4", "--eps", str(args.eps), "--particles", str(args.particles),
                "--horizon", str(args.horizon), "--method", args.method,
                "--csv", str(out / f"{name}.csv"), "--manifest", str(out / f"{name}.json")]
        if gamma is not None:
            argv += ["--gamma", repr(gamma)]
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = vclab(argv)
        summary = json.loads(buf.getvalue())
        drift = moment_drift(out / f"{name}.csv")
        report[name] = {"exit_code": code, "confinement": summary["confinement"],
                        "max_center_deviation": summary["max_center_deviation"],
                        "moment_drift_t10": drift.tolist()}
        print(f"{name:9s} exit={code} tau={summary['confinement'][0]['tau_estimate']:g} "
              f"I drift (t<=10) = {np.array2string(drift, precision=2)}")
    s, d = np.array(report["stable"]["moment_drift_t10"]), np.array(report["detuned"]["moment_drift_t10"])
    report["ring_drift_ratio"] = float(s[:3].max() / d[:3].max())
    report["all_drift_ratio"] = float(s.max() / d.max())
    (out / "summary.json").write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps({k: report[k] for k in ("ring_drift_ratio", "all_drift_ratio")}))


if __name__ == "__main__":
    main()
