"""
Tests for Gaussian energies on the half-plane

Validates:
- Localized energy of a linear field against its closed form
- Quadratic scaling in w
- sigma quadrature on and above the sub-grid layer
- Center and strip checks
- Ordering of the constrained half-space eigenvalues
"""
import numpy as np
import pytest

from src.errors import CenterNotZero, IterationStalled, StripOutsideGrid
from src.fields import ScalarField
from src.grid import make_grid
from src.monotonicity import (
    PhiSeries,
    _sigma_rule,
    estimate_halfspace_eigenvalue,
    monotonicity_functional,
    phi_growth_fit,
)


@pytest.fixture
def half_plane():
    return make_grid(2, "half_box_with_gamma", 129, 3, [[-4.0, 4.0], [0.0, 4.0]], 0.2)


def test_linear_field_energy(half_plane):
    """Test w = x2 gives phi(r) = r / 2 (unit gradient, half the Gaussian mass)."""
    _, x2 = half_plane.mesh()
    w = ScalarField.constant_in_time(half_plane, x2, "x2")
    radii = [0.05, 0.1, 0.2, 0.4]
    series = monotonicity_functional(w, (0.2, 0.0, 0.0), radii, cutoff_radius=3.5)

    np.testing.assert_allclose(series.values, [0.5 * r for r in radii], rtol=2e-2)
    assert series.is_nondecreasing()
    growth = phi_growth_fit(series)
    assert growth.fit.exponent == pytest.approx(1.0, abs=0.05)
    assert growth.bounded


def test_energy_quadratic_in_w(half_plane):
    x1, x2 = half_plane.mesh()
    w = ScalarField.constant_in_time(half_plane, x1 * x2, "w")
    radii = [0.1, 0.2]
    one = monotonicity_functional(w, (0.2, 0.0, 0.0), radii, 3.0).values
    three = monotonicity_functional(w.scaled(3.0), (0.2, 0.0, 0.0), radii, 3.0).values

    np.testing.assert_allclose(three, [9.0 * v for v in one], rtol=1e-12)


def test_center_must_vanish():
    grid = make_grid(2, "half_box_with_gamma", 257, 3, [[-1.0, 1.0], [0.0, 1.0]], 0.2)
    w = ScalarField(grid, np.ones(grid.shape), "one")
    with pytest.raises(CenterNotZero):
        monotonicity_functional(w, (0.2, 0.0, 0.0), [0.1], 0.5)


def test_strip_must_fit(half_plane):
    _, x2 = half_plane.mesh()
    w = ScalarField.constant_in_time(half_plane, x2, "x2")
    with pytest.raises(StripOutsideGrid):
        monotonicity_functional(w, (0.05, 0.0, 0.0), [0.4], 1.0)
    with pytest.raises(StripOutsideGrid):
        monotonicity_functional(w, (0.2, 3.0, 0.0), [0.1], 2.0)

    periodic = make_grid(1, "periodic_line", 16, 3, [0.0, 1.0], 0.2)
    with pytest.raises(StripOutsideGrid):
        monotonicity_functional(ScalarField(periodic, np.zeros(periodic.shape)), (0.2, 0.5), [0.1], 0.2)


def test_phi_series_helpers():
    series = PhiSeries(center=(0.0, 0.0, 0.0), cutoff_radius=1.0, radii=[0.1, 0.2, 0.4], values=[1.0, 1.1, 1.05])

    assert not series.is_nondecreasing()
    assert series.is_nondecreasing(relative_slack=0.1)
    assert series.spread() == pytest.approx(0.1 / np.mean([1.0, 1.1, 1.05]))
    assert phi_growth_fit(series).fit is None
    assert not phi_growth_fit(series).bounded


@pytest.mark.timeout(300)
def test_halfspace_eigenvalues_ordered():
    free = estimate_halfspace_eigenvalue(R=5.0, n=48, constraint="none")
    slit = estimate_halfspace_eigenvalue(R=5.0, n=48, constraint="slit")
    line = estimate_halfspace_eigenvalue(R=5.0, n=48, constraint="line")

    assert abs(free) <= 1e-8
    assert 0.2 <= slit <= 0.3
    assert line == pytest.approx(0.5, abs=0.05)
    assert free < slit < line


def test_eigenvalue_arguments():
    with pytest.raises(ValueError):
        estimate_halfspace_eigenvalue(R=2.0, n=8, constraint="disk")
    with pytest.raises(IterationStalled):
        estimate_halfspace_eigenvalue(R=2.0, n=8, constraint="line", max_iters=1)


@pytest.mark.parametrize("r, h", [(0.4, 1.0 / 64), (0.05, 1.0 / 256), (0.01, 0.1)])
def test_sigma_rule_integrates_powers(r, h):
    nodes, weights = _sigma_rule(r, h, 32)

    assert np.all((nodes > 0.0) & (nodes < r))
    assert np.sum(weights) == pytest.approx(r, rel=1e-12)
    assert np.sum(weights * nodes) == pytest.approx(0.5 * r * r, rel=1e-12)
