"""
Heat kernel and cutoff functions.

- heat_kernel: G(x,t) = (4 pi t)^(-n/2) exp(-|x|^2 / 4t), zero for t <= 0
- gaussian_cell_mass: exact 1D cell integrals of G (erf differences)
- smooth_cutoff: radial C^2 taper from 1 (r <= R/2) to 0 (r >= R)
"""
from typing import Sequence, Union

import numpy as np
from scipy.special import erf

ArrayLike = Union[float, np.ndarray]


def heat_kernel_r2(r2: ArrayLike, t: ArrayLike, n: int) -> np.ndarray:
    """Vectorized G in terms of the squared distance r2."""
    if n not in (1, 2, 3):
        raise ValueError(f"heat kernel dimension must be 1, 2 or 3, got {n}")
    r2 = np.asarray(r2, dtype=float)
    t = np.asarray(t, dtype=float)
    positive = t > 0
    t_safe = np.where(positive, t, 1.0)
    value = (4.0 * np.pi * t_safe) ** (-0.5 * n) * np.exp(-r2 / (4.0 * t_safe))
    return np.where(positive, value, 0.0)


def heat_kernel(x: Union[float, Sequence[float]], t: float, n: int) -> float:
    """G(x, t) at a single point x in R^n."""
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.shape != (n,):
        raise ValueError(f"point {point.tolist()} is not in R^{n}")
    return float(heat_kernel_r2(float(point @ point), t, n))


def gaussian_cell_mass(edges: np.ndarray, center: float, tau: float) -> np.ndarray:
    """
    Integral of the 1D heat kernel G(. - center, tau) over each cell [edges[i], edges[i+1]].
    """
    scale = 2.0 * np.sqrt(tau)
    cdf = erf((np.asarray(edges, dtype=float) - center) / scale)
    return 0.5 * np.diff(cdf)


def smooth_cutoff(r: ArrayLike, radius: float) -> np.ndarray:
    """Quintic smoothstep in r: 1 on [0, R/2], 0 on [R, inf)."""
    r = np.asarray(r, dtype=float)
    s = np.clip((r - 0.5 * radius) / (0.5 * radius), 0.0, 1.0)
    return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)
