"""Command-line front end: ``vclab {crystal,stability,integrate,blob,perturb}``.

Exit codes: 0 success / stable / confined, 2 usage, 3 unstable, 4 degenerate,
5 collapse, 6 confinement exit.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from vclab import __version__
from vclab.core import PAPER_UNIT, DomainError, block_norm, rotate
from vclab.crystal import build_crystal, relative_equilibrium_velocity
from vclab.dynamics import CollapseError, VortexConfiguration, integrate, run_perturbed_crystal
from vclab.stability import DegenerateSplittingError, cabral_schmidt_range, restricted_spectrum

EXIT_OK, EXIT_USAGE, EXIT_UNSTABLE, EXIT_DEGENERATE, EXIT_COLLAPSE, EXIT_EXITED = 0, 2, 3, 4, 5, 6


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 5
    gamma: float | None = None
    eps: float = 0.05
    dt: float | None = 1e-3
    t_final: float = 10.0
    beta: list = field(default_factory=lambda: [0.45])
    alpha: float = 0.2
    horizon: float | None = 20.0
    particles: int = 400
    seed: int = 1
    delta: float | None = None
    sample_dt: float = 0.1
    method: str = "tree"
    lipschitz_samples: int = 0
    early_stop: bool = True
    rotating_frame: bool = False
    paper_units: bool = False
    config_file: str | None = None
    collapse_threshold: float | None = None
    version: str = __version__

    def validate(self):
        if self.command in ("crystal", "stability", "blob", "perturb") or self.config_file is None:
            if int(self.n) != self.n or self.n < 4:
                raise UsageError(f"--n must be an integer >= 4, got {self.n}")
        if self.dt is not None and not self.dt > 0:
            raise UsageError("--dt must be positive")
        if self.command == "integrate" and not self.t_final >= (self.dt or 0):
            raise UsageError("--t-final must be at least dt")
        if self.command in ("blob", "perturb"):
            if not 0 < self.eps < 1:
                raise UsageError("--eps must lie in (0, 1)")
            if not self.beta or any(not 0 < b < 0.5 for b in self.beta):
                raise UsageError("every --beta must lie in (0, 1/2)")
        if self.command == "perturb":
            b = self.beta[0]
            if not 0 < self.alpha < b / 2:
                raise UsageError("need 0 < alpha < beta/2")
        if self.command == "blob":
            if self.particles < 16:
                raise UsageError("--particles must be at least 16")
            if self.horizon is None or not self.horizon > 0:
                raise UsageError("--horizon must be positive")
            if self.method not in ("tree", "direct"):
                raise UsageError("--method must be tree or direct")
        return self


def _emit(payload, path):
    text = json.dumps(payload, indent=2)
    print(text)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_crystal(cfg, json_out=None):
    spec = build_crystal(cfg.n, cfg.gamma)
    out = spec.to_dict()
    if cfg.paper_units:
        out["max_strain_norm"] *= PAPER_UNIT
    out["paper_units"] = cfg.paper_units
    out["config"] = asdict(cfg)
    _emit(out, json_out)
    return EXIT_OK


def cmd_stability(cfg, json_out=None):
    spec = build_crystal(cfg.n, cfg.gamma)
    try:
        report = restricted_spectrum(spec)
    except DegenerateSplittingError as exc:
        lo, hi = cabral_schmidt_range(cfg.n)
        g = Fraction(spec.central_intensity).limit_denominator(10**12)
        _emit({"n": cfg.n, "intensities": spec.intensities.tolist(),
               "gamma_center": spec.central_intensity, "range": [float(lo), float(hi)],
               "in_range": bool(lo < g < hi), "classification": "degenerate",
               "error": str(exc), "config": asdict(cfg)}, json_out)
        return EXIT_DEGENERATE
    out = report.to_dict(cfg.paper_units)
    out["config"] = asdict(cfg)
    _emit(out, json_out)
    return {"stable": EXIT_OK, "unstable": EXIT_UNSTABLE, "degenerate": EXIT_DEGENERATE}[
        report.classification]


def _load_configuration(path):
    with open(path) as fh:
        data = json.load(fh)
    return VortexConfiguration(data["positions"], data["intensities"])


def _angular_rate(traj, frame):
    """Mean counterclockwise rate of vortex 1 about the center of vorticity, inertial frame."""
    g = traj.intensities
    total = g.sum()
    center = traj.linear_impulse / total if abs(total) > 1e-14 else np.zeros_like(traj.linear_impulse)
    rel = traj.positions[:, 0, :] - center
    ang = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    rate = (ang[-1] - ang[0]) / (traj.times[-1] - traj.times[0])
    return rate + (frame or 0.0)


def cmd_integrate(cfg, csv_out=None):
    if cfg.config_file:
        c0 = _load_configuration(cfg.config_file)
    else:
        c0 = build_crystal(cfg.n, cfg.gamma).config
    try:
        omega, residual = relative_equilibrium_velocity(c0)
    except DomainError:
        omega, residual = 0.0, float("nan")
    frame = omega if cfg.rotating_frame else None
    sample_every = max(1, int(round(cfg.sample_dt / cfg.dt)))
    try:
        traj = integrate(c0, cfg.dt, cfg.t_final, frame_velocity=frame, sample_every=sample_every,
                         collapse_threshold=cfg.collapse_threshold)
    except CollapseError as exc:
        _emit({"collapse_time": exc.time, "error": str(exc), "config": asdict(cfg)}, None)
        return EXIT_COLLAPSE
    # deviation from the rigid rotation of the initial state
    ref_rate = 0.0 if cfg.rotating_frame else omega
    dev = np.array([block_norm(traj.positions[k] - rotate(c0.positions, ref_rate * t))
                    for k, t in enumerate(traj.times)])
    if csv_out:
        traj.to_csv(csv_out, extra={"max_dev": dev})
    rate = _angular_rate(traj, frame)
    drift = traj.drift()
    _emit({
        "n": c0.n, "samples": len(traj.times), "t_final": float(traj.times[-1]),
        "rest_point_residual": residual, "angular_velocity": omega,
        "angular_velocity_paper_units": PAPER_UNIT * omega,
        "measured_angular_velocity": rate,
        "measured_period": 2 * math.pi / abs(rate) if rate else None,
        "max_dev": float(dev.max()), "drift": drift, "config": asdict(cfg),
    }, None)
    return EXIT_OK


def cmd_blob(cfg, csv_out=None, manifest_out=None):
    from vclab import _kernels
    from vclab.eulerblob import (CFLError, ProbeConfig, cfl_limit, confinement_time, evolve,
                                 make_initial_blobs)

    threads = _kernels.set_threads()
    spec = build_crystal(cfg.n, cfg.gamma)
    f = make_initial_blobs(spec, cfg.eps, cfg.particles, cfg.seed, delta=cfg.delta)
    cfg.delta = f.delta
    if cfg.dt is None:
        # largest step <= min(1e-3, 0.9 * CFL limit) dividing the sampling interval
        target = min(1e-3, 0.9 * cfl_limit(f))
        cfg.dt = cfg.sample_dt / math.ceil(cfg.sample_dt / target)
    sample_every = max(1, int(round(cfg.sample_dt / cfg.dt)))
    stop = max(cfg.eps**b for b in cfg.beta) if cfg.early_stop else None
    probe = ProbeConfig(lipschitz_samples=cfg.lipschitz_samples, seed=cfg.seed, stop_radius=stop,
                        method=cfg.method)
    if manifest_out:
        with open(manifest_out, "w") as fh:
            json.dump(asdict(cfg), fh, indent=2)
    try:
        series = evolve(f, spec, cfg.dt, cfg.horizon, sample_every, probe)
    except CFLError as exc:
        raise UsageError(str(exc)) from exc
    if csv_out:
        series.to_csv(csv_out)
    results = [confinement_time(series, spec, cfg.eps, b) for b in cfg.beta]
    drift_p, drift_l = series.impulse_drift()
    _emit({
        "confinement": [r.to_dict() for r in results],
        "max_center_deviation": float(series.max_center_deviation.max()),
        "moment_drift": series.relative_moment_drift().tolist(),
        "impulse_drift": {"linear": drift_p, "angular": drift_l},
        "stopped_at": series.meta["stopped_at"], "threads": threads,
        "config": asdict(cfg),
    }, None)
    return EXIT_OK if all(r.confined for r in results) else EXIT_EXITED


def cmd_perturb(cfg, json_out=None):
    spec = build_crystal(cfg.n, cfg.gamma)
    try:
        rep = run_perturbed_crystal(spec, cfg.eps, cfg.alpha, cfg.beta[0], cfg.seed,
                                    dt=cfg.dt or 1e-3, horizon=cfg.horizon)
    except CollapseError as exc:
        _emit({"collapse_time": exc.time, "error": str(exc), "config": asdict(cfg)}, json_out)
        return EXIT_COLLAPSE
    out = rep.to_dict()
    out["config"] = asdict(cfg)
    _emit(out, json_out)
    return EXIT_OK if rep.within_bound else EXIT_EXITED


def build_parser():
    p = argparse.ArgumentParser(prog="vclab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, gamma=True):
        sp.add_argument("--n", type=int, default=5, help="number of vortices incl. center")
        if gamma:
            sp.add_argument("--gamma", type=float, default=None,
                            help="central intensity (default: strain-free value)")
        sp.add_argument("--paper-units", action="store_true",
                        help="report kernel-scaled quantities multiplied by 2 pi")

    sp = sub.add_parser("crystal", help="build a polygonal crystal")
    common(sp)
    sp.add_argument("--json", dest="json_out")

    sp = sub.add_parser("stability", help="spectral stability report")
    common(sp)
    sp.add_argument("--json", dest="json_out")

    sp = sub.add_parser("integrate", help="integrate the point-vortex system")
    common(sp)
    sp.add_argument("--config", dest="config_file", help="JSON with positions and intensities")
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--t-final", type=float, default=10.0)
    sp.add_argument("--sample-dt", type=float, default=0.01)
    sp.add_argument("--rotating-frame", action="store_true")
    sp.add_argument("--collapse-threshold", type=float, default=None,
                    help="minimum pair distance (default: 1e-6 times the initial one)")
    sp.add_argument("--csv", dest="csv_out")

    sp = sub.add_parser("blob", help="regularized particle run around a crystal")
    common(sp)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--particles", type=int, default=400)
    sp.add_argument("--beta", type=float, nargs="+", default=[0.45])
    sp.add_argument("--horizon", type=float, default=20.0)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--dt", type=float, default=None, help="default: min(1e-3, 0.9 CFL limit)")
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--sample-dt", type=float, default=0.1)
    sp.add_argument("--method", choices=["tree", "direct"], default="tree")
    sp.add_argument("--lipschitz-samples", type=int, default=0)
    sp.add_argument("--no-early-stop", dest="early_stop", action="store_false")
    sp.add_argument("--csv", dest="csv_out")
    sp.add_argument("--manifest", dest="manifest_out")
    sp.add_argument("--from-manifest", dest="from_manifest")

    sp = sub.add_parser("perturb", help="forced near-equilibrium point-vortex run")
    common(sp)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--alpha", type=float, default=0.2)
    sp.add_argument("--beta", type=float, nargs=1, default=[0.45])
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--horizon", type=float, default=None, help="default: eps**-alpha")
    sp.add_argument("--json", dest="json_out")
    return p


_FIELDS = set(RunConfig.__dataclass_fields__)


def _config_from_args(args):
    if getattr(args, "from_manifest", None):
        with open(args.from_manifest) as fh:
            data = json.load(fh)
        data["command"] = args.command
        return RunConfig(**{k: v for k, v in data.items() if k in _FIELDS})
    kw = {k: v for k, v in vars(args).items() if k in _FIELDS}
    if args.command in ("crystal", "stability"):
        kw["dt"] = None
    return RunConfig(**kw)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = _config_from_args(args).validate()
        if cfg.command == "crystal":
            return cmd_crystal(cfg, args.json_out)
        if cfg.command == "stability":
            return cmd_stability(cfg, args.json_out)
        if cfg.command == "integrate":
            return cmd_integrate(cfg, args.csv_out)
        if cfg.command == "blob":
            return cmd_blob(cfg, args.csv_out, args.manifest_out)
        return cmd_perturb(cfg, args.json_out)
    except (UsageError, DomainError) as exc:
        print(f"vclab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
