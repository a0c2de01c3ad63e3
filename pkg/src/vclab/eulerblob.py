"""Regularized vortex-particle solver for concentrated Euler vorticity blobs.

Each blob starts as a uniform patch of radius ``eps`` around a vortex of the
reference configuration and is carried by the regularized Biot-Savart field
K_delta(x) = x^perp / (2 pi (|x|^2 + delta^2)). Diagnostics track the moments
of each blob against the rigidly rotating point-vortex reference.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from vclab import _kernels
from vclab.core import TWO_PI, DomainError, block_norm
from vclab.dynamics import min_distance, rk4_step

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
CFL_FACTOR = 0.2


class NumericalBlowupError(RuntimeError):
    pass


class CFLError(DomainError):
    pass


@dataclass
class ParticleField:
    positions: np.ndarray  # (P, 2), blob-contiguous
    circulations: np.ndarray  # (P,)
    blob_index: np.ndarray  # (P,) int
    eps: float
    delta: float
    centers: np.ndarray  # (N, 2) initial vortex positions
    intensities: np.ndarray  # (N,)

    @property
    def n_blobs(self):
        return len(self.intensities)

    @property
    def offsets(self):
        return np.searchsorted(self.blob_index, np.arange(self.n_blobs + 1)).astype(np.int64)

    def blob(self, i):
        a, b = self.offsets[i], self.offsets[i + 1]
        return self.positions[a:b], self.circulations[a:b]

    def with_positions(self, positions):
        return ParticleField(np.asarray(positions, dtype=float), self.circulations, self.blob_index,
                             self.eps, self.delta, self.centers, self.intensities)

    @classmethod
    def point_vortices(cls, reference):
        """One particle per vortex, no regularization."""
        g = np.array(reference.intensities, dtype=float)
        pos = np.array(reference.positions, dtype=float)
        return cls(pos.copy(), g.copy(), np.arange(len(g)), 0.0, 0.0, pos, g)


def sunflower_disk(n, radius, rotation=0.0):
    """Vogel spiral: n points in the open disk, equal-area rings, golden-angle spacing."""
    k = np.arange(n)
    r = radius * np.sqrt((k + 0.5) / n)
    th = k * GOLDEN_ANGLE + rotation
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def default_delta(eps, particles_per_blob):
    return 0.5 * eps / math.sqrt(particles_per_blob)


def make_initial_blobs(spec, eps, particles_per_blob, seed, profile=None, delta=None):
    """Uniform vortex patches of radius ``eps`` around each vortex of ``spec``.

    ``profile`` optionally maps normalized radius r/eps to a non-negative
    relative density; circulations are renormalized so each blob carries
    exactly its intensity.
    """
    centers = np.array(spec.positions, dtype=float)
    gammas = np.array(spec.intensities, dtype=float)
    if particles_per_blob < 16:
        raise DomainError("need at least 16 particles per blob")
    if not eps > 0:
        raise DomainError("eps must be positive")
    if len(centers) > 1 and not eps < 0.5 * min_distance(centers):
        raise DomainError("eps must be below half the minimum vortex distance")
    rng = np.random.default_rng(seed)
    pos, circ, idx = [], [], []
    for i, (c, g) in enumerate(zip(centers, gammas)):
        pts = sunflower_disk(particles_per_blob, eps, rng.uniform(0.0, TWO_PI))
        if profile is None:
            w = np.full(particles_per_blob, g / particles_per_blob)
        else:
            dens = np.asarray(profile(np.hypot(pts[:, 0], pts[:, 1]) / eps), dtype=float)
            if np.any(dens < 0) or dens.sum() <= 0:
                raise DomainError("profile must be non-negative with positive mass")
            w = g * dens / dens.sum()
            # absorb rounding so the blob sum is exact
            w[-1] = g - w[:-1].sum()
        # put the discrete center of vorticity exactly on z_i*, support still inside eps
        pts = pts - w @ pts / w.sum()
        pts *= min(1.0, eps / np.sqrt(np.max(np.sum(pts * pts, axis=1))))
        pos.append(c + pts)
        circ.append(w)
        idx.append(np.full(particles_per_blob, i))
    if delta is None:
        delta = default_delta(eps, particles_per_blob)
    return ParticleField(np.vstack(pos), np.concatenate(circ), np.concatenate(idx),
                         float(eps), float(delta), centers, gammas)


def _velocity_arrays(X, w, offsets, delta, method, targets=None):
    tx, ty = (X[:, 0], X[:, 1]) if targets is None else (targets[:, 0], targets[:, 1])
    tx = np.ascontiguousarray(tx)
    ty = np.ascontiguousarray(ty)
    sx = np.ascontiguousarray(X[:, 0])
    sy = np.ascontiguousarray(X[:, 1])
    d2 = float(delta) ** 2
    if method == "direct":
        u, v = _kernels.direct_velocity(tx, ty, sx, sy, w, d2)
    elif method == "tree":
        u, v = _kernels.clustered_velocity(tx, ty, sx, sy, w, offsets, d2,
                                           _kernels.MULTIPOLE_ORDER, _kernels.THETA)
    else:
        raise ValueError(f"unknown summation method {method!r}")
    return np.stack([u, v], axis=1)


def field_velocity(f, targets, method="direct"):
    """Regularized velocity sum_p w_p K_delta(x - x_p) at each target.

    ``method="tree"`` treats each blob as a cluster and uses a truncated
    multipole expansion for targets well separated from it.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    return _velocity_arrays(f.positions, f.circulations, f.offsets, f.delta, method, targets)


def blob_moments(f):
    """Per-blob center of vorticity b_i, normalized second moment I_i and support radius R_i."""
    N = f.n_blobs
    b = np.empty((N, 2))
    I = np.empty(N)
    R = np.empty(N)
    for i in range(N):
        x, w = f.blob(i)
        g = w.sum()
        b[i] = w @ x / g
        d2 = np.sum((x - b[i]) ** 2, axis=1)
        I[i] = w @ d2 / g
        R[i] = math.sqrt(d2.max())
    return b, I, R


def mass_tail(f, i, r, center=None):
    """Fraction of the blob's |circulation| farther than ``r`` from its center of vorticity."""
    if r < 0:
        raise DomainError("r must be non-negative")
    x, w = f.blob(i)
    if center is None:
        center = w @ x / w.sum()
    far = np.hypot(x[:, 0] - center[0], x[:, 1] - center[1]) > r
    return float(np.abs(w[far]).sum() / abs(f.intensities[i]))


def exterior_field(f, i, targets):
    """Unregularized velocity at ``targets`` induced by every blob except ``i``."""
    mask = f.blob_index != i
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    X = f.positions[mask]
    return _velocity_arrays(X, f.circulations[mask], None, 0.0, "direct", targets)


def exterior_lipschitz_probe(f, spec, i, n_samples, radius, seed=0, center=None):
    """Max of |F_i(x) - F_i(y)| / |x - y| over random pairs in the disk D(b_i, radius)."""
    if len(spec.positions) > 1 and not radius < 0.5 * min_distance(spec.positions):
        raise DomainError("probe radius must be below half the minimum vortex distance")
    if center is None:
        x, w = f.blob(i)
        center = w @ x / w.sum()
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, (2, n_samples)))
    th = rng.uniform(0.0, TWO_PI, (2, n_samples))
    pts = center + np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    F = exterior_field(f, i, pts.reshape(-1, 2)).reshape(2, n_samples, 2)
    dist = np.linalg.norm(pts[0] - pts[1], axis=1)
    keep = dist > 1e-12 * radius
    ratio = np.linalg.norm(F[0] - F[1], axis=1)[keep] / dist[keep]
    return float(ratio.max())


def cfl_limit(f):
    """Largest admissible step, CFL_FACTOR * delta / v_max.

    v_max is the velocity variation across one regularization length,
    delta * omega_max, with the peak vorticity omega_max = |gamma_i| / (pi R_i^2)
    estimated from the particle support at the current time.
    """
    _, _, R = blob_moments(f)
    omega = np.abs(f.intensities) / (math.pi * np.maximum(R, 1e-300) ** 2)
    return CFL_FACTOR / float(omega.max())


@dataclass
class ProbeConfig:
    tail_radii: tuple | None = None  # default (eps, 2 eps)
    lipschitz_samples: int = 0
    lipschitz_radius: float | None = None  # default eps
    seed: int = 0
    stop_radius: float | None = None  # stop once a particle leaves D(z_i*(t), stop_radius)
    method: str = "tree"
    check_cfl: bool = True


@dataclass
class DiagnosticsSeries:
    times: np.ndarray
    centers: np.ndarray  # (S, N, 2)
    second_moments: np.ndarray  # (S, N)
    support_radii: np.ndarray  # (S, N)
    tails: np.ndarray  # (S, N, len(tail_radii))
    tail_radii: tuple
    reference_distance: np.ndarray  # (S, N): max_p |x_p - z_i*(t)| over blob i
    max_center_deviation: np.ndarray  # (S,)
    circulation: np.ndarray
    linear_impulse: np.ndarray  # (S, 2)
    angular_impulse: np.ndarray
    lipschitz: np.ndarray | None  # (S, N)
    horizon: float
    meta: dict = field(default_factory=dict)

    @property
    def n_blobs(self):
        return self.centers.shape[1]

    def columns(self):
        cols = ["t"]
        for i in range(1, self.n_blobs + 1):
            cols += [f"bx_{i}", f"by_{i}", f"I_{i}", f"R_{i}"]
            cols += [f"tail_{i}@r{k + 1}" for k in range(len(self.tail_radii))]
        cols.append("max_center_dev")
        if self.lipschitz is not None:
            cols.append("lipschitz_probe")
        cols += ["circ_total", "Px", "Py", "L"]
        cols += [f"zdist_{i}" for i in range(1, self.n_blobs + 1)]
        return cols

    def rows(self):
        for k, t in enumerate(self.times):
            row = [t]
            for i in range(self.n_blobs):
                row += [*self.centers[k, i], self.second_moments[k, i], self.support_radii[k, i]]
                row += list(self.tails[k, i])
            row.append(self.max_center_deviation[k])
            if self.lipschitz is not None:
                row.append(np.max(self.lipschitz[k]))
            row += [self.circulation[k], *self.linear_impulse[k], self.angular_impulse[k]]
            row += list(self.reference_distance[k])
            yield row

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])

    def relative_moment_drift(self, t_max=None):
        """Per blob max_t |I_i(t) - I_i(0)| / I_i(0) over samples with t <= t_max."""
        sel = slice(None) if t_max is None else self.times <= t_max + 1e-12
        I = self.second_moments[sel]
        return np.max(np.abs(I - I[0]), axis=0) / I[0]

    def impulse_drift(self):
        """Relative drift of linear and angular impulse, scaled by sum |w_p| |x_p|^k at t=0."""
        sp, sl = self.meta["impulse_scale"]
        dp = np.max(np.linalg.norm(self.linear_impulse - self.linear_impulse[0], axis=1))
        dl = np.max(np.abs(self.angular_impulse - self.angular_impulse[0]))
        return float(dp / max(np.linalg.norm(self.linear_impulse[0]), sp)), \
            float(dl / max(abs(self.angular_impulse[0]), sl))


def snapshot(f, reference, t, probe, eps):
    """All diagnostics of one particle state against the reference rotated to time t."""
    zstar = reference.positions_at(t)
    b, I, R = blob_moments(f)
    radii = probe.tail_radii or (eps, 2 * eps)
    tails = np.array([[mass_tail(f, i, r, b[i]) for r in radii] for i in range(f.n_blobs)])
    zdist = np.empty(f.n_blobs)
    for i in range(f.n_blobs):
        x, _ = f.blob(i)
        zdist[i] = math.sqrt(np.max(np.sum((x - zstar[i]) ** 2, axis=1)))
    w = f.circulations
    X = f.positions
    lip = None
    if probe.lipschitz_samples:
        rad = probe.lipschitz_radius or eps
        lip = np.array([exterior_lipschitz_probe(f, reference, i, probe.lipschitz_samples, rad,
                                                 seed=probe.seed, center=b[i])
                        for i in range(f.n_blobs)])
    return dict(t=t, b=b, I=I, R=R, tails=tails, zdist=zdist, dev=block_norm(b - zstar),
                circ=float(w.sum()), P=w @ X, L=float(w @ np.sum(X * X, axis=1)), lip=lip)


def series_from_snapshots(snaps, horizon, tail_radii, meta=None):
    lip = None
    if snaps[0]["lip"] is not None:
        lip = np.array([s["lip"] for s in snaps])
    return DiagnosticsSeries(
        times=np.array([s["t"] for s in snaps]),
        centers=np.array([s["b"] for s in snaps]),
        second_moments=np.array([s["I"] for s in snaps]),
        support_radii=np.array([s["R"] for s in snaps]),
        tails=np.array([s["tails"] for s in snaps]),
        tail_radii=tuple(tail_radii),
        reference_distance=np.array([s["zdist"] for s in snaps]),
        max_center_deviation=np.array([s["dev"] for s in snaps]),
        circulation=np.array([s["circ"] for s in snaps]),
        linear_impulse=np.array([s["P"] for s in snaps]),
        angular_impulse=np.array([s["L"] for s in snaps]),
        lipschitz=lip, horizon=float(horizon), meta=dict(meta or {}),
    )


def evolve(f, spec, dt, t_final, sample_every=100, probe=None):
    """Advance all particles with RK4 in the regularized field and record diagnostics.

    The reference positions z_i*(t) are the exact rigid rotation of
    ``spec.positions`` at ``spec.angular_velocity``. Stops early once a
    particle leaves D(z_i*(t), probe.stop_radius), if that radius is set.
    """
    probe = probe or ProbeConfig()
    if not dt > 0:
        raise DomainError("dt must be positive")
    if probe.check_cfl:
        limit = cfl_limit(f)
        if dt > limit * (1 + 1e-12):
            raise CFLError(f"dt={dt:.3g} exceeds the CFL limit {limit:.3g}")
    n_steps = max(1, int(round(t_final / dt)))
    w = np.ascontiguousarray(f.circulations, dtype=float)
    offsets = f.offsets
    delta = f.delta
    rhs = lambda t, X: _velocity_arrays(X, w, offsets, delta, probe.method)
    radii = probe.tail_radii or (f.eps, 2 * f.eps)

    X = np.array(f.positions, dtype=float)
    cur = f
    snaps = [snapshot(cur, spec, 0.0, probe, f.eps)]
    scale = (float(np.abs(w) @ np.hypot(X[:, 0], X[:, 1])), float(np.abs(w) @ np.sum(X * X, axis=1)))
    stopped = None
    for k in range(1, n_steps + 1):
        X = rk4_step(rhs, (k - 1) * dt, X, dt)
        last = k == n_steps
        if k % sample_every == 0 or last:
            if not np.all(np.isfinite(X)):
                raise NumericalBlowupError(f"non-finite particle positions at t={k * dt:.6g}")
            cur = f.with_positions(X)
            snaps.append(snapshot(cur, spec, k * dt, probe, f.eps))
            if probe.stop_radius is not None and np.max(snaps[-1]["zdist"]) > probe.stop_radius:
                stopped = k * dt
                break
    meta = {"dt": dt, "n_steps": n_steps, "sample_every": sample_every, "method": probe.method,
            "delta": delta, "eps": f.eps, "impulse_scale": scale, "stopped_at": stopped}
    series = series_from_snapshots(snaps, n_steps * dt, radii, meta)
    series.final_field = cur
    return series


@dataclass
class ConfinementResult:
    beta: float
    horizon: float
    tau_estimate: float
    exited_blob: int | None

    @property
    def confined(self):
        return self.exited_blob is None

    def to_dict(self):
        return {"beta": self.beta, "horizon": self.horizon, "tau_estimate": self.tau_estimate,
                "exited_blob": self.exited_blob, "confined": self.confined}


def confinement_time(series, spec, eps, beta):
    """First sampled time at which some blob leaves D(z_i*(t), eps**beta), else the horizon."""
    if not 0 < beta < 0.5:
        raise DomainError("beta must lie in (0, 1/2)")
    if series.n_blobs != len(spec.intensities):
        raise DomainError("series and reference have different vortex counts")
    radius = eps**beta
    out = series.reference_distance > radius
    hits = np.flatnonzero(out.any(axis=1))
    if hits.size == 0:
        return ConfinementResult(beta, series.horizon, series.horizon, None)
    k = hits[0]
    return ConfinementResult(beta, series.horizon, float(series.times[k]),
                             int(np.flatnonzero(out[k])[0]))
