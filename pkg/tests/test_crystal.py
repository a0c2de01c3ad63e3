import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vclab.core import TWO_PI, DomainError, biot_savart_kernel
from vclab.crystal import (
    build_crystal,
    central_gamma_closed,
    central_gamma_exact,
    central_gamma_sum,
    paper_strain_coefficient,
    polygon_positions,
    relative_equilibrium_velocity,
    strain_profile,
    strain_sum,
    strain_tensor,
)
from vclab.dynamics import VortexConfiguration, pvs_velocity

TABLE = {4: Fraction(-1, 3), 5: Fraction(-1, 4), 6: Fraction(0), 7: Fraction(5, 12), 8: Fraction(1)}


@pytest.mark.parametrize("n,expected", TABLE.items())
def test_central_gamma_table(n, expected):
    assert central_gamma_exact(n) == expected
    assert central_gamma_closed(n) == float(expected)


def brute_force_strain_sum(n):
    # the SWAP coefficient of 2 pi * sum_k J_K(1 - zeta^k) over the ring, evaluated term by term
    total = 0.0
    for k in range(1, n - 1):
        th = TWO_PI * k / (n - 1)
        y = np.array([1 - math.cos(th), -math.sin(th)])
        r4 = (y @ y) ** 2
        total += (y[1] ** 2 - y[0] ** 2) / r4
    return total


@given(st.integers(4, 200))
def test_strain_sum_matches_term_by_term_sum(n):
    # the antipodal vertex of an even ring contributes the separate -1/4
    assert math.isclose(central_gamma_sum(n), brute_force_strain_sum(n), rel_tol=1e-12, abs_tol=1e-12)
    assert central_gamma_sum(n) - strain_sum(n) == -(n % 2) / 4


@given(st.integers(4, 200))
def test_closed_form_agrees_with_sum(n):
    assert abs(central_gamma_closed(n) - central_gamma_sum(n)) <= 1e-10 * max(1.0, abs(central_gamma_closed(n)))


def test_polygon_layout():
    Z = polygon_positions(7)
    np.testing.assert_allclose(np.hypot(*Z[:-1].T), 1.0, rtol=1e-15)
    np.testing.assert_array_equal(Z[-2], [1.0, 0.0])
    np.testing.assert_array_equal(Z[-1], [0.0, 0.0])


def test_n6_has_no_center():
    spec = build_crystal(6)
    assert spec.config.n == 5 and not spec.has_center
    assert np.all(spec.intensities == 1.0)


@pytest.mark.parametrize("n", range(4, 13))
def test_crystal_is_relative_equilibrium(n):
    spec = build_crystal(n)
    assert spec.equilibrium_residual < 1e-13
    # oracle: every vortex moves with Omega perp(z)
    v = pvs_velocity(spec.config)
    Z = spec.positions
    np.testing.assert_allclose(v, spec.angular_velocity * np.stack([-Z[:, 1], Z[:, 0]], axis=1),
                               atol=1e-14)


@given(st.integers(4, 30), st.floats(-5.0, 5.0).filter(lambda g: abs(g) > 1e-3))
def test_angular_velocity_closed_form(n, gamma):
    spec = build_crystal(n, gamma)
    assert math.isclose(TWO_PI * spec.angular_velocity, (n - 2) / 2 + gamma, rel_tol=1e-12, abs_tol=1e-12)
    assert spec.frame_parameter == -spec.angular_velocity


def test_positions_at_rotates_counterclockwise():
    spec = build_crystal(5)
    t = 0.3
    np.testing.assert_allclose(spec.positions_at(t)[-2],
                               [math.cos(spec.angular_velocity * t), math.sin(spec.angular_velocity * t)])


def test_zero_angular_impulse_has_no_rate():
    c = VortexConfiguration([[1.0, 0.0], [-1.0, 0.0]], [1.0, -1.0])
    with pytest.raises(DomainError):
        relative_equilibrium_velocity(c)


def fd_strain(c, i, h=1e-6):
    def field(x):
        return sum(g * biot_savart_kernel(x - z) for j, (z, g) in enumerate(zip(c.positions, c.intensities))
                   if j != i)
    z = c.positions[i]
    return np.column_stack([(field(z + h * e) - field(z - h * e)) / (2 * h) for e in np.eye(2)])


@pytest.mark.parametrize("n,gamma", [(5, None), (7, 2.0), (9, -0.3)])
def test_strain_tensor_matches_fd(n, gamma):
    c = build_crystal(n, gamma).config
    for i in range(c.n):
        np.testing.assert_allclose(strain_tensor(c, i).value, fd_strain(c, i), atol=1e-8)


@pytest.mark.parametrize("n", range(4, 13))
def test_strain_vanishes_on_crystals(n):
    prof = strain_profile(build_crystal(n).config)
    assert prof.max_frobenius <= 1e-12


@pytest.mark.parametrize("n", range(4, 13))
def test_strain_linear_in_detuning(n):
    delta = 0.1
    spec = build_crystal(n, central_gamma_closed(n) + delta)
    t = strain_tensor(spec.config, spec.config.n - 2)  # the vertex z = 1
    coef = TWO_PI * t.swap_coefficient
    assert abs(abs(coef) - delta) <= 1e-12
    assert abs(coef - paper_strain_coefficient(n, spec.central_intensity)) <= 1e-12
    # 2-norm of delta * SWAP / (2 pi)
    assert math.isclose(t.norm, delta / TWO_PI, rel_tol=1e-10)
    assert math.isclose(t.frobenius, math.sqrt(2) * t.norm, rel_tol=1e-12)


def test_strain_site_out_of_range():
    with pytest.raises(DomainError):
        strain_tensor(build_crystal(5).config, 9)


@pytest.mark.parametrize("n", [3, 2.5, -1])
def test_small_n_rejected(n):
    with pytest.raises(DomainError):
        build_crystal(n)


def test_json_schema():
    d = json.loads(build_crystal(8).to_json())
    assert set(d) == {"n", "gamma_center", "nu_paper_units", "nu_physical", "equilibrium_residual",
                      "max_strain_norm", "positions", "intensities"}
    assert d["gamma_center"] == 1.0
    assert math.isclose(d["nu_paper_units"], 4.0, rel_tol=1e-14)
