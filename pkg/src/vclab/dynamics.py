"""Point-vortex system: vector field, first integrals and fixed-step integration."""

import csv
from dataclasses import dataclass, field

import numpy as np

from vclab.core import TWO_PI, DomainError, block_norm, perp, rotate

# Calibrated once on the N=5 crystal (see scripts/calibrate_perturbation.py) and frozen.
PERTURBATION_CONSTANT = 10.0


class CollapseError(DomainError):
    """Two vortices came closer than the collapse threshold."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class VortexConfiguration:
    positions: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        gam = np.array(self.intensities, dtype=float).reshape(-1)
        if pos.shape[0] != gam.shape[0]:
            raise DomainError("positions and intensities have different lengths")
        if pos.shape[0] < 1:
            raise DomainError("empty configuration")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(gam))):
            raise DomainError("non-finite configuration")
        if np.any(gam == 0.0):
            raise DomainError("vanishing intensity: remove the vortex instead")
        if pos.shape[0] > 1 and min_distance(pos) <= 0.0:
            raise DomainError("coincident vortices")
        pos.setflags(write=False)
        gam.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "intensities", gam)

    @property
    def n(self):
        return self.positions.shape[0]

    def with_positions(self, positions):
        return VortexConfiguration(positions, self.intensities)


def _differences(Z):
    D = Z[:, None, :] - Z[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", D, D)
    np.fill_diagonal(r2, np.inf)
    if np.any(r2 == 0.0):
        raise DomainError("coincident vortices")
    return D, r2


def min_distance(Z):
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    if Z.shape[0] < 2:
        return np.inf
    D = Z[:, None, :] - Z[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", D, D)
    np.fill_diagonal(r2, np.inf)
    return float(np.sqrt(r2.min()))


def _velocity(Z, gammas):
    D, r2 = _differences(Z)
    return perp(np.einsum("j,ijk->ik", gammas, D / r2[..., None])) / TWO_PI


def _gradient(Z, gammas):
    D, r2 = _differences(Z)
    return gammas[:, None] * np.einsum("j,ijk->ik", gammas, D / r2[..., None]) / TWO_PI


def pvs_velocity(c):
    """Velocity of every vortex in the field of the others, shape (N, 2)."""
    return _velocity(c.positions, c.intensities)


def hamiltonian(c):
    """H = 1/(4 pi) sum_{i != j} g_i g_j ln|z_i - z_j|.

    The 1/(4 pi) prefactor makes ``Gamma dZ/dt = J grad H`` exact for the
    2 pi-normalized kernel.
    """
    _, r2 = _differences(c.positions)
    g = c.intensities
    logs = np.where(np.isinf(r2), 0.0, 0.5 * np.log(r2))
    return float(g @ logs @ g) / (2.0 * TWO_PI)


def gradient_h(c):
    return _gradient(c.positions, c.intensities)


def impulses(c):
    """Linear impulse sum g_i z_i and angular impulse sum g_i |z_i|^2."""
    g = c.intensities
    Z = c.positions
    return g @ Z, float(g @ np.einsum("ik,ik->i", Z, Z))


def frame_field(gammas, frame_velocity=None):
    """Vector field of the system, optionally seen from a frame rotating at ``frame_velocity``.

    ``frame_velocity`` is the counterclockwise angular velocity Omega of the
    frame. In the matrix form ``Gamma dZ/dt = J(grad H + nu Gamma Z)`` this is
    ``nu = -Omega``.
    """
    gammas = np.asarray(gammas, dtype=float)
    if frame_velocity is None:
        return lambda t, Z: _velocity(Z, gammas)
    om = float(frame_velocity)
    return lambda t, Z: _velocity(Z, gammas) - om * perp(Z)


def rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray  # (samples, N, 2)
    intensities: np.ndarray
    hamiltonian: np.ndarray
    linear_impulse: np.ndarray  # (samples, 2)
    angular_impulse: np.ndarray
    min_distance: np.ndarray
    frame_velocity: float | None = None

    @property
    def n(self):
        return self.positions.shape[1]

    def configuration(self, k):
        return VortexConfiguration(self.positions[k], self.intensities)

    def drift(self):
        """Max deviation of H, |P| and L from their initial values."""
        return {
            "H": float(np.max(np.abs(self.hamiltonian - self.hamiltonian[0]))),
            "P": float(np.max(np.linalg.norm(self.linear_impulse - self.linear_impulse[0], axis=1))),
            "L": float(np.max(np.abs(self.angular_impulse - self.angular_impulse[0]))),
        }

    def columns(self):
        cols = ["t"]
        for i in range(1, self.n + 1):
            cols += [f"x_{i}", f"y_{i}"]
        return cols + ["H", "Px", "Py", "L", "dmin"]

    def rows(self):
        flat = self.positions.reshape(len(self.times), -1)
        for k, t in enumerate(self.times):
            yield [t, *flat[k], self.hamiltonian[k], *self.linear_impulse[k],
                   self.angular_impulse[k], self.min_distance[k]]

    def to_csv(self, path, extra=None):
        """Write the trajectory; ``extra`` maps column name -> per-sample values."""
        extra = extra or {}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns() + list(extra))
            for k, row in enumerate(self.rows()):
                row = row + [v[k] for v in extra.values()]
                w.writerow([repr(float(v)) for v in row])


def _record(Z, gammas):
    c = VortexConfiguration(Z, gammas)
    p, l = impulses(c)
    return hamiltonian(c), p, l, min_distance(Z)


def integrate(c0, dt, t_final, frame_velocity=None, sample_every=1, collapse_threshold=None):
    """Classical RK4 at fixed ``dt`` from ``c0`` up to ``t_final``.

    With ``frame_velocity`` the motion is computed in the frame rotating at that
    counterclockwise angular velocity. Samples every ``sample_every`` steps
    (plus the final state). Raises :class:`CollapseError` if the minimum
    pairwise distance drops below ``collapse_threshold`` (default 1e-6 times
    the initial minimum distance).
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    if not t_final >= dt:
        raise DomainError("t_final must be at least dt")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * t_final:
        n_steps = int(np.ceil(t_final / dt))
    gammas = np.array(c0.intensities)
    Z = np.array(c0.positions)
    d0 = min_distance(Z)
    if collapse_threshold is None:
        collapse_threshold = 1e-6 * d0 if np.isfinite(d0) else 0.0
    threshold = collapse_threshold
    f = frame_field(gammas, frame_velocity)

    times, states, recs = [0.0], [Z.copy()], [_record(Z, gammas)]
    for k in range(1, n_steps + 1):
        t = (k - 1) * dt
        Z = rk4_step(f, t, Z, dt)
        if not np.all(np.isfinite(Z)) or min_distance(Z) < threshold:
            raise CollapseError(f"collapse near t={k * dt:.6g}", k * dt)
        if k % sample_every == 0 or k == n_steps:
            times.append(k * dt)
            states.append(Z.copy())
            recs.append(_record(Z, gammas))
    H, P, L, dm = zip(*recs)
    return Trajectory(
        times=np.array(times), positions=np.array(states), intensities=gammas,
        hamiltonian=np.array(H), linear_impulse=np.array(P), angular_impulse=np.array(L),
        min_distance=np.array(dm), frame_velocity=frame_velocity,
    )


def rigid_rotation(positions, angular_velocity, times):
    """Positions rotated counterclockwise by ``angular_velocity * t`` for each t."""
    return np.array([rotate(positions, angular_velocity * t) for t in np.atleast_1d(times)])


@dataclass
class PerturbationReport:
    eps: float
    alpha: float
    beta: float
    horizon: float
    max_deviation: float
    times: np.ndarray
    deviations: np.ndarray
    forcing_bound: float
    initial_offset: float
    constant: float = PERTURBATION_CONSTANT
    exit_time: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def bound(self):
        return self.constant * self.eps ** (2 * self.beta - 2 * self.alpha)

    @property
    def confinement_radius(self):
        return self.eps ** self.beta

    @property
    def within_bound(self):
        return self.exit_time is None and self.max_deviation <= self.bound

    def to_dict(self):
        return {
            "eps": self.eps, "alpha": self.alpha, "beta": self.beta,
            "horizon": self.horizon, "max_deviation": self.max_deviation,
            "bound": self.bound, "constant": self.constant,
            "confinement_radius": self.confinement_radius,
            "forcing_bound": self.forcing_bound, "initial_offset": self.initial_offset,
            "exit_time": self.exit_time, "within_bound": self.within_bound,
            **self.meta,
        }


class SinusoidForcing:
    """Per-coordinate sum of three sinusoids, rescaled so every block has norm <= bound."""

    def __init__(self, n, bound, seed, terms=3):
        rng = np.random.default_rng(seed)
        self.freq = rng.uniform(0.1, 2.0, size=(terms, n, 2))
        self.phase = rng.uniform(0.0, TWO_PI, size=(terms, n, 2))
        amp = rng.uniform(0.5, 1.0, size=(terms, n, 2))
        # sum of |amplitudes| per coordinate = bound / sqrt(2)
        self.amp = amp / amp.sum(axis=0) * (bound / np.sqrt(2.0))
        self.bound = bound

    def __call__(self, t):
        return np.sum(self.amp * np.sin(self.freq * t + self.phase), axis=0)


def run_perturbed_crystal(spec, eps, alpha, beta, forcing_seed, dt=1e-3, horizon=None,
                          forcing=True, perturb_initial=True, sample_every=10):
    """Near-equilibrium experiment in the frame co-rotating with ``spec``.

    Integrates ``Gamma dZ/dt = J(grad H + nu Gamma Z) + f(t)`` with a seeded
    smooth forcing of block sup-norm ``eps`` from a seeded start with
    ``|Z(0) - Z*| <= eps``. The horizon is ``eps**-alpha`` unless an explicit
    ``horizon`` is passed. Records the block-max deviation from Z* and the first
    time it exceeds ``eps**beta``.
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    if not (0 < alpha < beta / 2 and beta / 2 < 0.25):
        raise DomainError("need 0 < alpha < beta/2 < 1/4")
    T = eps ** (-alpha) if horizon is None else float(horizon)
    n_steps = max(1, int(np.ceil(T / dt)))
    dt = T / n_steps

    config = spec.config
    gammas = np.array(config.intensities)
    Zs = np.array(config.positions)
    n = config.n
    rng = np.random.default_rng(forcing_seed)
    offset = np.zeros_like(Zs)
    if perturb_initial:
        r = eps * np.sqrt(rng.uniform(0.0, 1.0, n))
        th = rng.uniform(0.0, TWO_PI, n)
        offset = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    base = frame_field(gammas, spec.angular_velocity)
    if forcing:
        push = SinusoidForcing(n, eps, rng.integers(2**63))
        f = lambda t, Z: base(t, Z) + push(t) / gammas[:, None]
    else:
        f = base

    Z = Zs + offset
    threshold = 1e-6 * min_distance(Zs) if n > 1 else 0.0
    radius = eps ** beta
    times, devs = [0.0], [block_norm(Z - Zs)]
    exit_time = None if devs[0] <= radius else 0.0
    dmax = devs[0]
    for k in range(1, n_steps + 1):
        Z = rk4_step(f, (k - 1) * dt, Z, dt)
        if not np.all(np.isfinite(Z)) or min_distance(Z) < threshold:
            raise CollapseError(f"collapse near t={k * dt:.6g}", k * dt)
        d = block_norm(Z - Zs)
        dmax = max(dmax, d)
        if exit_time is None and d > radius:
            exit_time = k * dt
        if k % sample_every == 0 or k == n_steps:
            times.append(k * dt)
            devs.append(d)
    devs = np.array(devs)
    return PerturbationReport(
        eps=eps, alpha=alpha, beta=beta, horizon=T, max_deviation=float(dmax),
        times=np.array(times), deviations=devs, forcing_bound=eps if forcing else 0.0,
        initial_offset=block_norm(offset), exit_time=exit_time,
        meta={"n": n, "dt": dt, "seed": forcing_seed},
    )
