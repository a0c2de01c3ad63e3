"""Linear stability of relative equilibria on the complement of the rotation plane."""

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import null_space

from vclab.core import PAPER_UNIT, TWO_PI, DomainError, symplectic
from vclab.crystal import CrystalSpec

REAL_PART_TOL = 1e-8
CONDITION_LIMIT = 1e6
EQUILIBRIUM_TOL = 1e-8


class DegenerateSplittingError(DomainError):
    """sum_{i != j} g_i g_j vanishes, so the rotation plane has no complement."""


def hessian_h(c):
    """D^2 H as a symmetric (2N, 2N) matrix, blocks ordered (x_1, y_1, ..., x_N, y_N)."""
    Z = c.positions
    g = c.intensities
    n = c.n
    D = Z[:, None, :] - Z[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", D, D)
    np.fill_diagonal(r2, 1.0)
    if np.any(r2 == 0.0):
        raise DomainError("coincident vortices")
    eye = np.eye(2)
    # G(y) = (|y|^2 I - 2 y y^T) / |y|^4 for every ordered pair
    G = (r2[..., None, None] * eye - 2.0 * D[..., :, None] * D[..., None, :]) / (r2**2)[..., None, None]
    G[np.arange(n), np.arange(n)] = 0.0
    W = np.outer(g, g) / TWO_PI
    blocks = -W[..., None, None] * G
    diag = -blocks.sum(axis=1)
    blocks[np.arange(n), np.arange(n)] = diag
    return blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)


def _interaction_sum(g):
    g = np.asarray(g, dtype=float)
    return float(np.sum(g) ** 2 - np.sum(g**2))


def linearization(c, frame_velocity=0.0):
    """Jacobian of the field seen from a frame rotating at ``frame_velocity``, at any configuration.

    Equals ``Gamma^-1 J D^2H(Z) + nu J`` with ``nu = -frame_velocity``.
    """
    J = symplectic(c.n)
    ginv = np.repeat(1.0 / c.intensities, 2)
    return ginv[:, None] * (J @ hessian_h(c)) - frame_velocity * J


def stability_matrix(spec):
    """S = Gamma^-1 J D^2H(Z*) + nu J with nu = spec.frame_parameter.

    This is the Jacobian at Z* of the field seen from the frame rotating with
    the crystal.
    """
    if spec.equilibrium_residual > EQUILIBRIUM_TOL:
        raise DomainError(f"not a relative equilibrium (residual {spec.equilibrium_residual:.3g})")
    return linearization(spec.config, spec.angular_velocity)


@dataclass
class SubspaceSplit:
    v_basis: np.ndarray  # (2N, 2): Z*, J Z*
    perp_basis: np.ndarray  # (2N, 2N - 2), Euclidean-orthonormal columns
    projector: np.ndarray  # onto V-perp along V
    orthogonality_residual: float
    invariance_residual: float

    @property
    def dims(self):
        return self.v_basis.shape[1], self.perp_basis.shape[1]


def subspace_split(spec, S=None):
    """Split R^2N into V = span{Z*, JZ*} and its Gamma-orthogonal complement."""
    c = spec.config
    g = np.repeat(c.intensities, 2)
    scale = float(np.sum(np.abs(c.intensities)) ** 2)
    if abs(_interaction_sum(c.intensities)) <= 1e-12 * scale:
        raise DegenerateSplittingError("sum of g_i g_j over i != j vanishes")
    if S is None:
        S = stability_matrix(spec)
    z = c.positions.ravel()
    B = np.column_stack([z, symplectic(c.n) @ z])
    GB = g[:, None] * B
    # Gamma is indefinite in general, so orthonormalize in the Euclidean product.
    Q = null_space(GB.T)
    P = np.eye(len(z)) - B @ np.linalg.solve(B.T @ GB, GB.T)
    ortho = float(np.max(np.abs(GB.T @ Q))) if Q.size else 0.0
    inv = float(np.max(np.linalg.norm((np.eye(len(z)) - P) @ S @ Q, axis=0))) if Q.size else 0.0
    return SubspaceSplit(v_basis=B, perp_basis=Q, projector=P,
                         orthogonality_residual=ortho, invariance_residual=inv)


def cabral_schmidt_range(n):
    """Open interval of central intensities for which the polygon is stable, as fractions."""
    if int(n) != n or n < 4:
        raise DomainError(f"need N >= 4, got {n}")
    n = int(n)
    lo = Fraction(n * n - 10 * n + (17 if n % 2 else 16), 16)
    hi = Fraction((n - 2) ** 2, 4)
    return lo, hi


@dataclass
class StabilityReport:
    n: int
    intensities: np.ndarray
    angular_velocity: float
    frame_parameter: float
    spectrum: np.ndarray
    max_real_part: float
    spectral_radius: float
    eigvec_condition: float
    v_block: np.ndarray
    gamma_sum: float
    range: tuple | None
    in_range: bool | None
    dims: tuple
    invariance_residual: float
    classification: str

    @property
    def relative_real_part(self):
        return self.max_real_part / self.spectral_radius if self.spectral_radius > 0 else 0.0

    def sorted_spectrum(self):
        s = self.spectrum
        return s[np.lexsort((s.real, s.imag))]

    def to_dict(self, paper_units=False):
        k = PAPER_UNIT if paper_units else 1.0
        lo_hi = None if self.range is None else [float(self.range[0]), float(self.range[1])]
        return {
            "n": self.n,
            "intensities": self.intensities.tolist(),
            "gamma_center": float(self.intensities[-1]) if self.n == len(self.intensities) else 0.0,
            "nu_physical": self.angular_velocity,
            "nu_paper_units": PAPER_UNIT * self.angular_velocity,
            "frame_parameter": self.frame_parameter,
            "spectrum": [[float(z.real) * k, float(z.imag) * k] for z in self.sorted_spectrum()],
            "max_real_part": self.max_real_part * k,
            "spectral_radius": self.spectral_radius * k,
            "relative_real_part": self.relative_real_part,
            "eigvec_condition": self.eigvec_condition,
            "v_block": (self.v_block * k).tolist(),
            "gamma_sum": self.gamma_sum,
            "range": lo_hi,
            "in_range": self.in_range,
            "dim_v": self.dims[0],
            "dim_v_perp": self.dims[1],
            "invariance_residual": self.invariance_residual,
            "classification": self.classification,
            "paper_units": paper_units,
        }

    def to_json(self, paper_units=False, **kw):
        return json.dumps(self.to_dict(paper_units), **kw)


def restricted_spectrum(spec):
    """Spectrum of S on V-perp and the resulting stability classification.

    Stable means every eigenvalue has |Re| <= 1e-8 times the spectral radius
    and the eigenvector matrix has condition number <= 1e6 (a numerical
    stand-in for real block-diagonalizability with [[0, b], [-b, 0]] blocks).
    """
    S = stability_matrix(spec)
    split = subspace_split(spec, S)
    Q = split.perp_basis
    M = Q.T @ S @ Q
    vals, vecs = np.linalg.eig(M)
    radius = float(np.max(np.abs(vals))) if vals.size else 0.0
    max_re = float(np.max(np.abs(vals.real))) if vals.size else 0.0
    cond = float(np.linalg.cond(vecs)) if vals.size else 1.0
    B = split.v_basis
    v_block = np.linalg.lstsq(B, S @ B, rcond=None)[0]

    tol = REAL_PART_TOL * max(radius, np.finfo(float).tiny)
    if max_re > tol:
        label = "unstable"
    elif cond > CONDITION_LIMIT or not np.isfinite(cond):
        label = "degenerate"
    else:
        label = "stable"

    n = getattr(spec, "n", spec.config.n)
    rng, inside = None, None
    if isinstance(spec, CrystalSpec):
        rng = cabral_schmidt_range(n)
        g = Fraction(spec.central_intensity).limit_denominator(10**12)
        inside = bool(rng[0] < g < rng[1])
    return StabilityReport(
        n=n, intensities=np.array(spec.intensities), angular_velocity=spec.angular_velocity,
        frame_parameter=spec.frame_parameter, spectrum=vals, max_real_part=max_re,
        spectral_radius=radius, eigvec_condition=cond, v_block=v_block,
        gamma_sum=_interaction_sum(spec.intensities), range=rng, in_range=inside,
        dims=split.dims, invariance_residual=split.invariance_residual, classification=label,
    )
