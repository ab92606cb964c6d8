"""
Finite-difference stencils on uniform grids.

- fd_laplacian: 3-point / 5-point centered Laplacian with ghost closure on the contact line
- second_incremental_quotient: u(z+w) + u(z-w) - 2u(z) over |w|^2
- gradient helpers used by the diagnostics
"""
import logging
from typing import Optional, Sequence

import numpy as np

from src.errors import ShapeMismatch, StepTooLarge
from src.fields import IncrementalQuotient, ScalarField
from src.grid import Geometry, Grid

logger = logging.getLogger(__name__)


def _check_slice(slice_values: np.ndarray, grid: Grid) -> np.ndarray:
    arr = np.asarray(slice_values, dtype=float)
    if arr.shape != grid.space_shape:
        raise ShapeMismatch(f"slice shape {arr.shape} != grid space shape {grid.space_shape}")
    return arr


def neumann_ghost(slice_values: np.ndarray, grid: Grid) -> np.ndarray:
    """Ghost row below the contact line for zero normal flux (even reflection)."""
    return np.array(slice_values[:, 1], dtype=float)


def ghost_from_flux(slice_values: np.ndarray, grid: Grid, flux) -> np.ndarray:
    """Ghost row such that the centered difference of du/dx2 on the contact line equals flux."""
    return slice_values[:, 1] - 2.0 * grid.h * np.asarray(flux, dtype=float)


def fd_laplacian(slice_values, grid: Grid, ghost: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Centered discrete Laplacian of one spatial slice.

    Box: interior nodes only, Dirichlet nodes return 0.
    HalfBoxWithGamma: contact-line nodes use the ghost row (defaults to the Neumann ghost).
    PeriodicLine: wraps around.

    Raises:
        ShapeMismatch: slice shape differs from the grid
    """
    u = _check_slice(slice_values, grid)
    inv_h2 = 1.0 / grid.h ** 2
    out = np.zeros_like(u)

    if grid.geometry == Geometry.PERIODIC_LINE:
        return (np.roll(u, 1) - 2.0 * u + np.roll(u, -1)) * inv_h2

    if grid.dim == 1:
        out[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) * inv_h2
        return out

    out[1:-1, 1:-1] = (
        u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2] + u[1:-1, 2:] - 4.0 * u[1:-1, 1:-1]
    ) * inv_h2

    if grid.geometry == Geometry.HALF_BOX:
        g = neumann_ghost(u, grid) if ghost is None else np.asarray(ghost, dtype=float)
        if g.shape != (grid.space_shape[0],):
            raise ShapeMismatch(f"ghost row shape {g.shape} != ({grid.space_shape[0]},)")
        out[1:-1, 0] = (u[:-2, 0] + u[2:, 0] + u[1:-1, 1] + g[1:-1] - 4.0 * u[1:-1, 0]) * inv_h2
    return out


def gamma_normal_derivative(slice_values: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order one-sided du/dx2 along the contact line (all x1 nodes)."""
    u = np.asarray(slice_values, dtype=float)
    return (-3.0 * u[:, 0] + 4.0 * u[:, 1] - u[:, 2]) / (2.0 * grid.h)


def spatial_gradient(slice_values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """Nodal gradient components (second order, one-sided at edges, wrapped if periodic)."""
    u = np.asarray(slice_values, dtype=float)
    if grid.periodic:
        return [(np.roll(u, -1) - np.roll(u, 1)) / (2.0 * grid.h)]
    if grid.dim == 1:
        return [np.gradient(u, grid.h, edge_order=2)]
    return list(np.gradient(u, grid.h, edge_order=2))


def gradient_norm(slice_values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.sqrt(sum(g ** 2 for g in spatial_gradient(slice_values, grid)))


def second_incremental_quotient(
    field: ScalarField,
    direction: Sequence[float],
    step: float,
) -> IncrementalQuotient:
    """
    (u(z+w) + u(z-w) - 2u(z)) / |w|^2 with w = step * direction.

    direction is ordered (t, x1[, x2]). Components of w are rounded to whole
    lattice offsets; |w| uses the realized offsets. Nodes whose neighbours fall
    off a non-periodic axis are marked unavailable.

    Raises:
        ValueError: direction has the wrong length or rounds to zero
        StepTooLarge: no node has both neighbours inside the grid
    """
    grid = field.grid
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (grid.dim + 1,):
        raise ValueError(f"direction needs {grid.dim + 1} components (t, x...), got {direction.shape}")

    spacings = np.array([grid.dt] + [grid.h] * grid.dim)
    offsets = tuple(int(o) for o in np.rint(step * direction / spacings))
    if not any(offsets):
        raise ValueError(f"step {step} along {direction.tolist()} rounds to a zero lattice offset")
    norm2 = float(np.sum((np.array(offsets) * spacings) ** 2))

    u = field.values
    plus = u
    minus = u
    available = np.ones(u.shape, dtype=bool)
    for axis, off in enumerate(offsets):
        if off == 0:
            continue
        plus = np.roll(plus, -off, axis=axis)
        minus = np.roll(minus, off, axis=axis)
        periodic_axis = grid.periodic and axis == 1
        if not periodic_axis:
            n = u.shape[axis]
            idx = np.arange(n)
            ok = (idx - abs(off) >= 0) & (idx + abs(off) < n)
            shape = [1] * u.ndim
            shape[axis] = n
            available &= ok.reshape(shape)

    if not available.any():
        raise StepTooLarge(f"offsets {offsets} leave no node with both neighbours in the grid")

    values = np.where(available, (plus + minus - 2.0 * u) / norm2, 0.0)
    return IncrementalQuotient(grid=grid, values=values, available=available, offsets=offsets)


def fractional_multiplier(grid: Grid, s: float) -> np.ndarray:
    """|k|^(2s) on the FFT frequencies of a periodic line."""
    if not grid.periodic:
        raise ValueError("fractional multiplier needs a periodic line")
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n_space, d=grid.h)
    return np.abs(k) ** (2.0 * s)


def fractional_laplacian(slice_values, grid: Grid, s: float) -> np.ndarray:
    """(-Delta)^s of a periodic slice, applied spectrally."""
    u = _check_slice(slice_values, grid)
    return np.real(np.fft.ifft(fractional_multiplier(grid, s) * np.fft.fft(u)))


def fractional_matrix(grid: Grid, s: float) -> np.ndarray:
    """Dense matrix of (-Delta)^s: column j is the operator applied to the j-th unit vector."""
    eye = np.eye(grid.n_space)
    mult = fractional_multiplier(grid, s)
    return np.real(np.fft.ifft(mult[:, None] * np.fft.fft(eye, axis=0), axis=0))
