"""Regular polygon with a central vortex: construction, angular velocity and strain."""

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from vclab.core import PAPER_UNIT, SWAP, TWO_PI, DomainError, kernel_jacobian, rotate
from vclab.dynamics import VortexConfiguration, gradient_h, impulses


def _check_n(n):
    if int(n) != n or n < 4:
        raise DomainError(f"polygonal crystals need N >= 4, got {n}")
    return int(n)


def central_gamma_exact(n):
    """(N - 2)(N - 6) / 12 as an exact fraction."""
    n = _check_n(n)
    return Fraction((n - 2) * (n - 6), 12)


def central_gamma_closed(n):
    return float(central_gamma_exact(n))


def strain_sum(n):
    """The trigonometric sum c_N over conjugate pairs of ring vertices."""
    n = _check_n(n)
    j = np.arange(1, (n - 2) // 2 + 1)
    zeta = np.exp(2j * np.pi * j / (n - 1))
    num = zeta.imag**2 - (1.0 - zeta.real) ** 2
    return float(2.0 * np.sum(num / np.abs(1.0 - zeta) ** 4))


def central_gamma_sum(n):
    """Central intensity cancelling the strain, c_N - sigma(N)/4, summed numerically."""
    n = _check_n(n)
    return strain_sum(n) - (n % 2) / 4.0


@dataclass(frozen=True)
class RelativeEquilibrium:
    """A configuration together with the angular velocity of its rigid rotation.

    ``angular_velocity`` is the physical counterclockwise rate Omega, in units
    where the kernel carries 1/(2 pi).
    """

    config: VortexConfiguration
    angular_velocity: float
    equilibrium_residual: float = 0.0

    @property
    def positions(self):
        return self.config.positions

    @property
    def intensities(self):
        return self.config.intensities

    @property
    def frame_parameter(self):
        """nu in ``grad H + nu Gamma Z* = 0``; equals -Omega."""
        return -self.angular_velocity

    def positions_at(self, t):
        return rotate(self.config.positions, self.angular_velocity * t)


@dataclass(frozen=True)
class CrystalSpec(RelativeEquilibrium):
    n: int = 0
    central_intensity: float = 0.0

    @property
    def has_center(self):
        return self.central_intensity != 0.0

    def to_dict(self):
        return {
            "n": self.n,
            "gamma_center": self.central_intensity,
            "nu_paper_units": PAPER_UNIT * self.angular_velocity,
            "nu_physical": self.angular_velocity,
            "equilibrium_residual": self.equilibrium_residual,
            "max_strain_norm": strain_profile(self.config).max_norm,
            "positions": self.positions.tolist(),
            "intensities": self.intensities.tolist(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def polygon_positions(n):
    """Ring vertices zeta^k, k = 1..N-1, followed by the center."""
    n = _check_n(n)
    k = np.arange(1, n)
    th = TWO_PI * k / (n - 1)
    ring = np.stack([np.cos(th), np.sin(th)], axis=1)
    # zeta^(N-1) = 1 exactly
    ring[-1] = (1.0, 0.0)
    return np.vstack([ring, [[0.0, 0.0]]])


def polygon_configuration(n, central_intensity):
    pos = polygon_positions(n)
    gam = np.ones(n)
    gam[-1] = central_intensity
    if central_intensity == 0.0:
        pos, gam = pos[:-1], gam[:-1]
    return VortexConfiguration(pos, gam)


def relative_equilibrium_velocity(c):
    """Angular velocity of the best rigid rotation, and the rest-point residual.

    Solves ``min_nu |grad H + nu Gamma Z|`` in the least-squares sense and
    returns ``(Omega, residual)`` with ``Omega = -nu``, the counterclockwise
    rotation rate.
    """
    _, angular = impulses(c)
    g = c.intensities
    Z = c.positions
    scale = float(np.sum(np.abs(g) * np.einsum("ik,ik->i", Z, Z)))
    if scale == 0.0 or abs(angular) <= 1e-14 * scale:
        raise DomainError("zero angular impulse: no rotation rate is defined")
    grad = gradient_h(c).ravel()
    gz = (g[:, None] * Z).ravel()
    nu = -float(grad @ gz) / float(gz @ gz)
    residual = float(np.linalg.norm(grad + nu * gz))
    return -nu, residual


def build_crystal(n, central_intensity=None):
    """Polygonal crystal with unit ring intensities on the unit circle.

    The central intensity defaults to (N - 2)(N - 6)/12. A zero central
    intensity removes the center vortex altogether.
    """
    n = _check_n(n)
    gamma = central_gamma_closed(n) if central_intensity is None else float(central_intensity)
    config = polygon_configuration(n, gamma)
    omega, residual = relative_equilibrium_velocity(config)
    return CrystalSpec(config=config, angular_velocity=omega, equilibrium_residual=residual,
                       n=n, central_intensity=gamma)


@dataclass(frozen=True)
class StrainTensor:
    site: int
    value: np.ndarray

    @property
    def norm(self):
        """Operator 2-norm; for a symmetric trace-free matrix it is |[[a, b], [b, -a]]| = hypot(a, b)."""
        return float(np.linalg.norm(self.value, 2))

    @property
    def frobenius(self):
        return float(np.linalg.norm(self.value))

    @property
    def swap_coefficient(self):
        """Coefficient of [[0, 1], [1, 0]] (exact when the diagonal vanishes)."""
        return float(0.5 * (self.value[0, 1] + self.value[1, 0]))


@dataclass(frozen=True)
class StrainProfile:
    tensors: list

    @property
    def max_norm(self):
        return max(t.norm for t in self.tensors)

    @property
    def max_frobenius(self):
        return max(t.frobenius for t in self.tensors)


def strain_tensor(c, i):
    """sum_{j != i} gamma_j J_K(z_i - z_j) at site ``i``."""
    if not 0 <= i < c.n:
        raise DomainError(f"site index {i} out of range")
    value = np.zeros((2, 2))
    zi = c.positions[i]
    for j in range(c.n):
        if j != i:
            value += c.intensities[j] * kernel_jacobian(zi - c.positions[j])
    return StrainTensor(site=i, value=value)


def strain_profile(c):
    return StrainProfile([strain_tensor(c, i) for i in range(c.n)])


def paper_strain_coefficient(n, central_intensity):
    """Closed-form coefficient of SWAP in 2 pi times the strain at the vertex z = 1."""
    n = _check_n(n)
    return -central_intensity + strain_sum(n) - (n % 2) / 4.0


__all__ = [
    "SWAP", "CrystalSpec", "RelativeEquilibrium", "StrainProfile", "StrainTensor",
    "build_crystal", "central_gamma_closed", "central_gamma_exact", "central_gamma_sum",
    "paper_strain_coefficient", "polygon_configuration", "polygon_positions",
    "relative_equilibrium_velocity", "strain_profile", "strain_sum", "strain_tensor",
]
