"""
Tests for heat kernel and cutoff helpers
"""
import numpy as np
import pytest
from scipy.integrate import trapezoid

from src.acceptance import heat_residual
from src.kernels import gaussian_cell_mass, heat_kernel, heat_kernel_r2, smooth_cutoff


def test_heat_kernel_peak_value():
    assert heat_kernel([0.0], 1.0, 1) == pytest.approx((4 * np.pi) ** -0.5)
    assert heat_kernel([0.0, 0.0], 0.25, 2) == pytest.approx(1.0 / np.pi)


def test_heat_kernel_zero_for_nonpositive_time():
    assert heat_kernel([0.3], 0.0, 1) == 0.0
    assert heat_kernel([0.3], -1.0, 1) == 0.0
    values = heat_kernel_r2(np.array([0.0, 1.0]), np.array([-0.5, 0.0]), 2)
    assert np.all(values == 0.0)


def test_heat_kernel_unit_mass():
    """Test the 1D kernel integrates to one."""
    x = np.linspace(-20.0, 20.0, 40001)
    mass = trapezoid(heat_kernel_r2(x ** 2, 1.5, 1), x)
    assert mass == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
@pytest.mark.parametrize("n", [1, 2])
def test_heat_kernel_mass_on_scaled_grid(t, n):
    """Test unit mass on half-width 8 sqrt(t) with spacing sqrt(t) / 10."""
    x = np.arange(-80, 81) * (np.sqrt(t) / 10.0)
    if n == 1:
        mass = trapezoid(heat_kernel_r2(x ** 2, t, 1), x)
    else:
        mass = trapezoid(trapezoid(heat_kernel_r2(np.add.outer(x ** 2, x ** 2), t, 2), x), x)
    assert abs(mass - 1.0) <= 1e-4


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_heat_kernel_solves_heat_equation(t):
    x = np.linspace(-3.0, 3.0, 13)
    assert heat_residual(x[:, None], t) <= 1e-3
    assert heat_residual(np.column_stack([x, -0.5 * x]), t) <= 1e-3


def test_heat_kernel_bad_input():
    with pytest.raises(ValueError):
        heat_kernel_r2(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        heat_kernel([0.0, 0.0], 1.0, 1)


def test_gaussian_cell_mass_sums_to_one():
    edges = np.linspace(-20.0, 20.0, 401)
    masses = gaussian_cell_mass(edges, 0.0, 1.0)

    assert masses.shape == (400,)
    assert np.all(masses >= 0.0)
    assert masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_gaussian_cell_mass_symmetric_about_center():
    edges = np.linspace(-3.0, 5.0, 81)
    masses = gaussian_cell_mass(edges, 1.0, 0.3)
    np.testing.assert_allclose(masses, masses[::-1], atol=1e-14)


def test_smooth_cutoff_profile():
    R = 2.0
    r = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 4.0])
    values = smooth_cutoff(r, R)

    np.testing.assert_allclose(values, [1.0, 1.0, 1.0, 0.5, 0.0, 0.0], atol=1e-14)
    fine = smooth_cutoff(np.linspace(0.0, 3.0, 301), R)
    assert np.all(np.diff(fine) <= 1e-15)
