"""
Tests for closed-form reference solutions
"""
import numpy as np
import pytest

from src.profiles import heat_series_solution, signorini_profile, signorini_profile_gradient, signorini_profile_xy


def test_signorini_profile_reference_values():
    assert signorini_profile((1.0, 0.0), 0.0) == pytest.approx(2.0 / 3.0)
    assert signorini_profile((-1.0, 0.0), 0.0) == 0.0
    assert signorini_profile((0.0, 1.0), 0.0) == pytest.approx(-(2.0 / 3.0) * np.sqrt(0.5))


def test_signorini_profile_vanishes_on_negative_axis():
    x1 = -np.linspace(0.1, 2.0, 20)
    np.testing.assert_array_equal(signorini_profile_xy(x1, 0.0), 0.0)


def test_signorini_profile_homogeneity():
    """Test u0(lambda x) = lambda^(3/2) u0(x)."""
    points = np.array([[0.3, 0.2], [-0.4, 0.7], [1.1, 0.05]])
    for lam in (0.25, 2.0, 7.0):
        np.testing.assert_allclose(
            signorini_profile(lam * points, 0.0),
            lam ** 1.5 * signorini_profile(points, 0.0),
            rtol=1e-12,
        )


def test_signorini_profile_even_in_x2():
    assert signorini_profile((0.3, 0.4), 0.0) == pytest.approx(signorini_profile((0.3, -0.4), 0.0))


def test_traveling_profile_shifts_with_time():
    value = signorini_profile((0.2, 0.3), 0.5, omega=0.3)
    assert value == pytest.approx(signorini_profile((0.2 + 0.15, 0.3), 0.0))


def test_profile_gradient_matches_finite_differences():
    x1, x2, d = 0.3, 0.4, 1e-6
    g1, g2 = signorini_profile_gradient(x1, x2)
    fd1 = (signorini_profile((x1 + d, x2), 0.0) - signorini_profile((x1 - d, x2), 0.0)) / (2 * d)
    fd2 = (signorini_profile((x1, x2 + d), 0.0) - signorini_profile((x1, x2 - d), 0.0)) / (2 * d)

    assert float(g1) == pytest.approx(fd1, rel=1e-6)
    assert float(g2) == pytest.approx(fd2, rel=1e-6)


def test_profile_is_harmonic():
    x1, x2, d = 0.5, 0.6, 1e-3
    u = lambda a, b: signorini_profile((a, b), 0.0)
    lap = (u(x1 + d, x2) + u(x1 - d, x2) + u(x1, x2 + d) + u(x1, x2 - d) - 4 * u(x1, x2)) / d ** 2
    assert abs(lap) < 1e-5


def test_heat_series_modes_decay():
    value = heat_series_solution([(1, 1.0)], 0.5, 0.1)
    assert float(value) == pytest.approx(np.exp(-np.pi ** 2 * 0.1))

    periodic = heat_series_solution([(2, 0.5)], 0.0, 0.25, kind="periodic")
    assert float(periodic) == pytest.approx(0.5 * np.exp(-1.0))


def test_heat_series_unknown_kind():
    with pytest.raises(ValueError):
        heat_series_solution([(1, 1.0)], 0.5, 0.1, kind="robin")
