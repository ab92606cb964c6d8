"""
Closed-form reference solutions.

- signorini_profile: traveling thin-obstacle profile (2/3) rho^(3/2) cos(3 theta / 2)
- signorini_profile_gradient: its spatial gradient (unrotated)
- heat_series_solution: manufactured Fourier-series heat solutions
"""
from typing import Iterable, Sequence, Union

import numpy as np

from src.grid import Geometry, Grid

ArrayLike = Union[float, np.ndarray]


def _shifted_polar(x1: ArrayLike, x2: ArrayLike, t: ArrayLike, omega: float, rotation: float):
    y1 = np.asarray(x1, dtype=float) + omega * np.asarray(t, dtype=float)
    y2 = np.asarray(x2, dtype=float)
    c, s = np.cos(rotation), np.sin(rotation)
    r1 = c * y1 - s * y2
    r2 = s * y1 + c * y2
    rho = np.hypot(r1, r2)
    theta = np.abs(np.arctan2(r2, r1))
    return rho, theta


def signorini_profile_xy(
    x1: ArrayLike,
    x2: ArrayLike,
    t: ArrayLike = 0.0,
    omega: float = 0.0,
    rotation: float = 0.0,
) -> np.ndarray:
    """Vectorized profile on coordinate arrays (broadcast together)."""
    rho, theta = _shifted_polar(x1, x2, t, omega, rotation)
    value = (2.0 / 3.0) * rho ** 1.5 * np.cos(1.5 * theta)
    # cos(3 pi / 4 * 2) is not exactly zero in floating point
    return np.where(theta == np.pi, 0.0, value)


def signorini_profile(x: Sequence[float], t: float, omega: float = 0.0, rotation: float = 0.0):
    """
    u0(x, t) = (2/3) rho^(3/2) cos(3 theta / 2).

    rho, theta are polar coordinates of (x1 + omega t, x2) after rotating by `rotation`;
    theta is taken in [0, pi] (even reflection across x2 = 0).
    `x` may be a single point (x1, x2) or an array with last axis of length 2.
    """
    arr = np.asarray(x, dtype=float)
    value = signorini_profile_xy(arr[..., 0], arr[..., 1], t, omega, rotation)
    return float(value) if value.ndim == 0 else value


def signorini_profile_gradient(
    x1: ArrayLike,
    x2: ArrayLike,
    t: ArrayLike = 0.0,
    omega: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """(du0/dx1, du0/dx2) = (rho^(1/2) cos(theta/2), -rho^(1/2) sin(theta/2))."""
    rho, theta = _shifted_polar(x1, x2, t, omega, 0.0)
    root = np.sqrt(rho)
    return root * np.cos(0.5 * theta), -root * np.sin(0.5 * theta)


def series_kind_for(grid: Grid) -> str:
    if grid.geometry == Geometry.PERIODIC_LINE:
        return "periodic"
    return "dirichlet"


def heat_series_solution(
    modes: Iterable[tuple[float, float]],
    x: ArrayLike,
    t: ArrayLike,
    kind: str = "dirichlet",
) -> np.ndarray:
    """
    Sum of decaying heat modes.

    dirichlet: sum a_k exp(-(pi k)^2 t) sin(pi k x) on [0, 1]
    neumann:   sum a_k exp(-(pi k)^2 t) cos(pi k x) on [0, 1]
    periodic:  sum a_k exp(-k^2 t) cos(k x) on [0, 2 pi]
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    total = np.zeros(np.broadcast(x, t).shape)
    for k, amplitude in modes:
        if kind == "dirichlet":
            total = total + amplitude * np.exp(-(np.pi * k) ** 2 * t) * np.sin(np.pi * k * x)
        elif kind == "neumann":
            total = total + amplitude * np.exp(-(np.pi * k) ** 2 * t) * np.cos(np.pi * k * x)
        elif kind == "periodic":
            total = total + amplitude * np.exp(-float(k) ** 2 * t) * np.cos(k * x)
        else:
            raise ValueError(f"unknown series kind '{kind}'")
    return total
