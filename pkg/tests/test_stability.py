import dataclasses
import json
from fractions import Fraction

import numpy as np
import pytest
from conftest import random_configuration
from hypothesis import given
from hypothesis import strategies as st

from vclab.core import DomainError, symplectic
from vclab.crystal import build_crystal, central_gamma_exact
from vclab.dynamics import frame_field, gradient_h
from vclab.stability import (
    DegenerateSplittingError,
    cabral_schmidt_range,
    hessian_h,
    linearization,
    restricted_spectrum,
    stability_matrix,
    subspace_split,
)


def fd_jacobian(f, Z, h=1e-5):
    z = Z.ravel()
    cols = []
    for k in range(z.size):
        e = np.zeros_like(z)
        e[k] = h
        cols.append((f((z + e).reshape(-1, 2)) - f((z - e).reshape(-1, 2))).ravel() / (2 * h))
    return np.column_stack(cols)


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_hessian_is_fd_of_gradient(seed, n):
    c = random_configuration(np.random.default_rng(seed), n)
    fd = fd_jacobian(lambda Z: gradient_h(c.with_positions(Z)), c.positions)
    H = hessian_h(c)
    np.testing.assert_allclose(H, fd, atol=1e-6)
    np.testing.assert_allclose(H, H.T, atol=1e-14)


@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.floats(-1.0, 1.0))
def test_linearization_is_fd_of_rotating_field(seed, n, omega):
    c = random_configuration(np.random.default_rng(seed), n)
    f = frame_field(c.intensities, omega)
    fd = fd_jacobian(lambda Z: f(0.0, Z), c.positions)
    np.testing.assert_allclose(linearization(c, omega), fd, atol=1e-6)


@pytest.mark.parametrize("n", [4, 5, 7, 9])
def test_stability_matrix_is_fd_at_crystal(n):
    spec = build_crystal(n)
    f = frame_field(spec.intensities, spec.angular_velocity)
    np.testing.assert_allclose(stability_matrix(spec), fd_jacobian(lambda Z: f(0.0, Z), spec.positions),
                               atol=1e-7)


def test_stability_matrix_needs_equilibrium():
    spec = build_crystal(5)
    moved = type(spec)(config=spec.config, angular_velocity=spec.angular_velocity,
                       equilibrium_residual=1e-3, n=5, central_intensity=spec.central_intensity)
    with pytest.raises(DomainError):
        stability_matrix(moved)


@pytest.mark.parametrize("n", range(4, 13))
def test_action_on_rotation_plane(n):
    spec = build_crystal(n)
    S = stability_matrix(spec)
    z = spec.positions.ravel()
    Jz = symplectic(spec.config.n) @ z
    nu = spec.frame_parameter
    # S Z* = 2 nu J Z* and S J Z* = 0
    np.testing.assert_allclose(S @ z, 2 * nu * Jz, atol=1e-12)
    np.testing.assert_allclose(S @ Jz, 0.0, atol=1e-12)
    rep = restricted_spectrum(spec)
    np.testing.assert_allclose(rep.v_block, [[0, 0], [2 * nu, 0]], atol=1e-12)


@pytest.mark.parametrize("n", range(4, 13))
def test_crystals_spectrally_stable(n):
    rep = restricted_spectrum(build_crystal(n))
    assert rep.classification == "stable"
    assert rep.relative_real_part <= 1e-8
    assert rep.invariance_residual <= 1e-12
    assert rep.dims == (2, 2 * len(rep.intensities) - 2)
    assert rep.in_range


@pytest.mark.parametrize("n", range(4, 10))
def test_restricted_spectrum_is_hamiltonian(n):
    # eigenvalues come in pairs lambda, -conj(lambda)
    s = restricted_spectrum(build_crystal(n, float(central_gamma_exact(n)) + 0.7)).spectrum
    mirror = -s.conj()
    assert np.max(np.min(np.abs(s[:, None] - mirror[None, :]), axis=1)) < 1e-10
    # and real eigenvalues pair up as +-lambda
    assert np.max(np.min(np.abs(s[:, None] + s[None, :]), axis=1)) < 1e-10


def test_perp_basis_is_gamma_orthogonal():
    spec = build_crystal(4)
    split = subspace_split(spec)
    g = np.repeat(spec.intensities, 2)
    assert split.orthogonality_residual < 1e-13
    np.testing.assert_allclose(split.v_basis.T @ (g[:, None] * split.perp_basis), 0.0, atol=1e-13)
    np.testing.assert_allclose(split.perp_basis.T @ split.perp_basis, np.eye(6), atol=1e-13)
    P = split.projector
    np.testing.assert_allclose(P @ P, P, atol=1e-13)


def test_range_values():
    assert cabral_schmidt_range(4) == (Fraction(-1, 2), Fraction(1))
    assert cabral_schmidt_range(5) == (Fraction(-1, 2), Fraction(9, 4))
    assert cabral_schmidt_range(8) == (Fraction(0), Fraction(9))
    with pytest.raises(DomainError):
        cabral_schmidt_range(3)


@pytest.mark.parametrize("n", [5, 7, 8])
def test_transition_at_lower_end(n):
    lo, _ = cabral_schmidt_range(n)
    below = restricted_spectrum(build_crystal(n, float(lo) - 1e-3))
    above = restricted_spectrum(build_crystal(n, float(lo) + 1e-3))
    assert below.classification == "unstable" and below.max_real_part > 1e-3
    assert above.classification == "stable"


def test_large_center_destabilizes_square():
    rep = restricted_spectrum(build_crystal(4, 3.0))
    assert rep.classification == "unstable"
    assert rep.max_real_part > 0.2
    assert not rep.in_range


def test_square_with_negative_center_is_degenerate():
    # a nilpotent block: eigenvalues on the imaginary axis with nearly parallel eigenvectors
    rep = restricted_spectrum(build_crystal(4, -3.0))
    assert rep.classification == "degenerate"
    assert rep.eigvec_condition > 1e6
    assert rep.relative_real_part < 1e-6
    # independent look at the full Jacobian; differencing splits the double root by ~sqrt(1e-10)
    spec = build_crystal(4, -3.0)
    f = frame_field(spec.intensities, spec.angular_velocity)
    lam = np.linalg.eigvals(fd_jacobian(lambda Z: f(0.0, Z), spec.positions, h=1e-6))
    assert np.max(lam.real) < 1e-4


def test_degenerate_splitting():
    # sum_{i != j} g_i g_j = 6 + 6 g vanishes for the square with g = -1
    with pytest.raises(DegenerateSplittingError):
        restricted_spectrum(build_crystal(4, -1.0))


def test_report_json():
    d = json.loads(restricted_spectrum(build_crystal(7)).to_json(paper_units=True))
    assert d["classification"] == "stable" and d["paper_units"]
    assert d["range"] == [float(cabral_schmidt_range(7)[0]), 6.25]
    assert len(d["spectrum"]) == 12
    im = [p[1] for p in d["spectrum"]]
    assert im == sorted(im)


@given(st.integers(4, 9), st.floats(0.0, 2 * np.pi), st.floats(-0.4, 0.4))
def test_spectrum_invariant_under_rotation(n, theta, dg):
    spec = build_crystal(n, float(central_gamma_exact(n)) + dg)
    c, s = np.cos(theta), np.sin(theta)
    turned = dataclasses.replace(spec, config=spec.config.with_positions(spec.positions @ [[c, s], [-s, c]]))
    a, b = restricted_spectrum(spec), restricted_spectrum(turned)
    assert a.classification == b.classification
    gap = np.abs(a.spectrum[:, None] - b.spectrum[None, :])
    assert max(gap.min(0).max(), gap.min(1).max()) < 1e-7
