"""
Tests for free-boundary geometry

Validates:
- Interface extraction on exact stationary / traveling profiles
- Coincidence threshold checks
- Parabolic density of a straight contact line
- Blow-ups and the traveling-profile fit
"""
import dataclasses

import numpy as np
import pytest

from src.errors import GapTolTooSmall, RadiiUnresolvable, WindowOutsideGrid
from src.fields import ScalarField
from src.free_boundary import (
    extract_free_boundary,
    fit_blowup_profile,
    hyperbolic_blowup,
    interface_trajectory,
    parabolic_density,
    reference_lattice,
)
from src.grid import make_grid
from src.problems import Prototype, builtin_grid, closed_form_field
from src.solvers import SolveResult


def _exact(name: str, n_space: int, n_time: int, T: float) -> SolveResult:
    grid = builtin_grid(name, n_space=n_space, n_time=n_time, T=T)
    u = closed_form_field(name, grid)
    return SolveResult.from_fields(u, ScalarField(grid, np.zeros(grid.shape), "psi"), Prototype.SIGNORINI, name)


def test_stationary_interface_at_origin():
    result = _exact("signorini-stationary", 65, 9, 0.25)
    snapshots = extract_free_boundary(result)

    assert len(snapshots) == 9
    for snap in snapshots:
        assert len(snap.interface_points) == 1
        x1, x2 = snap.interface_points[0]
        assert x1 == pytest.approx(0.0, abs=1e-9)
        assert x2 == 0.0
        assert snap.coincidence_mask.sum() == 33
    assert snapshots[0].to_dict()["coincident_nodes"] == 33


def test_traveling_interface_moves_with_speed():
    result = _exact("signorini-traveling", 65, 33, 0.5)
    times, xs = interface_trajectory(extract_free_boundary(result))

    assert times.size == 33
    assert np.max(np.abs(xs + 0.3 * times)) <= result.grid.h
    assert np.polyfit(times, xs, 1)[0] == pytest.approx(-0.3, abs=0.05)


def test_gap_tol_below_eps_rejected():
    result = dataclasses.replace(_exact("signorini-stationary", 17, 5, 0.25), eps_used=1e-2)
    with pytest.raises(GapTolTooSmall):
        extract_free_boundary(result, gap_tol=1e-3)
    assert len(extract_free_boundary(result)) == 5


def test_periodic_interface_wraps():
    grid = make_grid(1, "periodic_line", 16, 3, [0.0, 1.0], 0.1)
    (x,) = grid.axes
    gap = np.where((x > 0.3) & (x < 0.7), 1.0, 0.0)
    u = ScalarField.constant_in_time(grid, gap, "u")
    result = SolveResult.from_fields(u, ScalarField(grid, np.zeros(grid.shape)), Prototype.FRACTIONAL)
    points = extract_free_boundary(result)[0].interface_points

    assert len(points) == 2
    assert all(0.0 <= p[0] < 1.0 for p in points)


def test_density_of_straight_contact_line():
    result = _exact("signorini-stationary", 65, 9, 0.25)
    snapshots = extract_free_boundary(result)
    h = result.grid.h
    report = parabolic_density(snapshots, (0.25, 0.0, 0.0), [4 * h, 8 * h, 16 * h])

    expected = [5 / 9, 9 / 17, 17 / 33]
    np.testing.assert_allclose([d for _, d in report.series], expected, rtol=1e-12)
    assert report.c_hat == pytest.approx(17 / 33)


def test_density_radius_checked():
    result = _exact("signorini-stationary", 17, 5, 0.25)
    snapshots = extract_free_boundary(result)
    with pytest.raises(RadiiUnresolvable):
        parabolic_density(snapshots, (0.25, 0.0, 0.0), [result.grid.h])
    with pytest.raises(RadiiUnresolvable):
        parabolic_density([], (0.25, 0.0, 0.0), [0.5])


def test_reference_lattice_shapes():
    half = reference_lattice(builtin_grid("signorini-stationary", 17, 5))
    assert half.extent == ((-1.0, 1.0), (0.0, 1.0))
    assert half.times[0] == pytest.approx(-1.0) and half.times[-1] == pytest.approx(1.0)

    line = reference_lattice(make_grid(1, "box", 9, 5, [0.0, 1.0], 0.1))
    assert line.dim == 1


@pytest.mark.timeout(120)
def test_stationary_blowup_reproduces_profile():
    """Test the profile is its own blow-up (3/2-homogeneous) and the fit recovers omega = 0."""
    result = _exact("signorini-stationary", 65, 33, 1.0)
    blowup = hyperbolic_blowup(result.u, (0.5, 0.0, 0.0), 0.5)
    ref = blowup.grid
    t, x1, x2 = ref.space_time_mesh()
    expected = (2.0 / 3.0) * np.hypot(x1, x2) ** 1.5 * np.cos(1.5 * np.arctan2(x2, x1))
    expected[(x2 == 0.0) & (x1 < 0.0)] = 0.0

    np.testing.assert_allclose(blowup.values, expected, atol=1e-9)
    fit = fit_blowup_profile(blowup)
    assert abs(fit.omega_hat) <= 0.01
    assert abs(fit.rotation_hat) <= 0.01
    assert fit.accepted


@pytest.mark.timeout(120)
def test_traveling_blowup_fit_recovers_speed():
    result = _exact("signorini-traveling", 65, 33, 1.0)
    fit = fit_blowup_profile(hyperbolic_blowup(result.u, (0.5, -0.15, 0.0), 0.5))

    assert fit.omega_hat == pytest.approx(0.3, abs=0.03)
    assert fit.relative_error <= 0.05


def test_zero_blowup_is_rejected():
    grid = reference_lattice(builtin_grid("signorini-stationary", 17, 5))
    fit = fit_blowup_profile(ScalarField(grid, np.zeros(grid.shape), "zero"))
    assert not fit.accepted


def test_blowup_window_checked():
    result = _exact("signorini-stationary", 33, 9, 1.0)
    with pytest.raises(WindowOutsideGrid):
        hyperbolic_blowup(result.u, (0.5, 0.0, 0.0), 0.9)
    with pytest.raises(WindowOutsideGrid):
        hyperbolic_blowup(result.u, (0.5, 0.8, 0.0), 0.3)


def test_fit_needs_two_dimensions():
    line = reference_lattice(make_grid(1, "box", 9, 5, [0.0, 1.0], 0.1))
    with pytest.raises(ValueError):
        fit_blowup_profile(ScalarField(line, np.zeros(line.shape)))
