"""
Gaussian energies on the half-plane.

- monotonicity_functional: phi(r) = (1/r) int_{-r^2}^0 int |grad(eta w)|^2 G(x - x0, -s) dx ds
- phi_growth_fit: phi(r) ~ C r^gamma, classified bounded / growing
- estimate_halfspace_eigenvalue: smallest Gaussian Rayleigh quotient with a slit,
  full-line or no constraint on the contact line
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from src.errors import CenterNotZero, IterationStalled, StripOutsideGrid
from src.fields import ScalarField
from src.grid import Geometry, Grid
from src.kernels import gaussian_cell_mass, smooth_cutoff
from src.regularity import PowerFit, fit_power_law

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_NODES = 32
SIGMA_LAYER = 2.0
GAUSSIAN_FLOOR = 1e-16
CENTER_ZERO_FACTOR = 10.0

EIGEN_SHIFT = 0.01
EIGEN_TOL = 1e-10
EIGEN_MAX_ITERS = 500
CONSTRAINTS = ("slit", "line", "none")


@dataclass(frozen=True)
class PhiSeries:
    center: tuple
    cutoff_radius: float
    radii: list
    values: list

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "cutoff_radius": self.cutoff_radius,
            "radii": list(self.radii),
            "values": list(self.values),
        }

    def is_nondecreasing(self, relative_slack: float = 0.0) -> bool:
        return all(b >= a - relative_slack * abs(a) for a, b in zip(self.values, self.values[1:]))

    def spread(self) -> float:
        """(max - min) / mean, a measure of how far the series is from constant."""
        v = np.asarray(self.values, dtype=float)
        mean = float(np.mean(v))
        return float((v.max() - v.min()) / mean) if mean > 0 else 0.0


def _slice_at(w: ScalarField, t: float, window=Ellipsis) -> np.ndarray:
    """Linear interpolation of w between time levels, restricted to a node window."""
    grid = w.grid
    pos = (t - grid.t0) / grid.dt
    k = int(np.clip(np.floor(pos), 0, grid.n_time - 2))
    theta = float(np.clip(pos - k, 0.0, 1.0))
    return (1.0 - theta) * w.values[k][window] + theta * w.values[k + 1][window]


def _sigma_rule(r: float, h: float, n_sigma: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights for int_0^r g(sigma) d sigma.

    Gauss-Legendre on the sub-grid layer [0, SIGMA_LAYER h], then Gauss-Legendre
    in ln sigma up to r. Both rules depend on r and h only through h / r.
    """
    x, wq = np.polynomial.legendre.leggauss(n_sigma)
    layer = min(r, SIGMA_LAYER * h)
    nodes = 0.5 * layer * (x + 1.0)
    weights = 0.5 * layer * wq
    if layer < r:
        span = np.log(r / layer)
        outer = layer * np.exp(0.5 * span * (x + 1.0))
        nodes = np.concatenate([nodes, outer])
        weights = np.concatenate([weights, 0.5 * span * wq * outer])
    return nodes, weights


def _cell_energy(values: np.ndarray, grid: Grid) -> np.ndarray:
    """|grad|^2 at cell centers from nodal values."""
    h = grid.h
    if grid.dim == 1:
        return (np.diff(values) / h) ** 2
    gx = np.diff(values, axis=0) / h
    gy = np.diff(values, axis=1) / h
    gx_c = 0.5 * (gx[:, :-1] + gx[:, 1:])
    gy_c = 0.5 * (gy[:-1, :] + gy[1:, :])
    return gx_c ** 2 + gy_c ** 2


def _gaussian_window(grid: Grid, x0: Sequence[float], tau: float) -> tuple[tuple, np.ndarray]:
    """
    Node window holding every cell with non-negligible Gaussian mass, and the
    masses of the cells inside it. Cells cut along an axis have a 1D mass below
    the floor, so their product mass is below it too.
    """
    window, masses = [], []
    for axis, c in zip(grid.axes, x0):
        m = gaussian_cell_mass(axis, c, tau)
        live = np.flatnonzero(m >= GAUSSIAN_FLOOR * m.max())
        lo, hi = int(live[0]), int(live[-1]) + 1
        window.append(slice(lo, hi + 1))
        masses.append(m[lo:hi])
    weights = masses[0] if grid.dim == 1 else np.outer(masses[0], masses[1])
    weights = np.where(weights < GAUSSIAN_FLOOR * weights.max(), 0.0, weights)
    return tuple(window), weights


def _check_strip(grid: Grid, t0: float, x0: Sequence[float], r_max: float, cutoff_radius: float):
    if t0 - r_max ** 2 < grid.t0 - 1e-12 or t0 > grid.t0 + grid.horizon + 1e-12:
        raise StripOutsideGrid(f"time strip [{t0 - r_max ** 2:g}, {t0:g}] leaves the grid")
    for axis, (lo, hi) in enumerate(grid.extent):
        below_ok = x0[axis] - cutoff_radius >= lo - 1e-12 or (axis == 1 and grid.geometry == Geometry.HALF_BOX)
        if not below_ok or x0[axis] + cutoff_radius > hi + 1e-12:
            raise StripOutsideGrid(f"cutoff ball of radius {cutoff_radius:g} leaves the grid along axis {axis}")


def monotonicity_functional(
    w: ScalarField,
    center: Sequence[float],
    radii: Sequence[float],
    cutoff_radius: float,
    n_sigma: int = DEFAULT_SIGMA_NODES,
) -> PhiSeries:
    """
    Localized Gaussian energy of w at center = (t0, x0...).

    Time: s = -sigma^2 (weight 2 sigma), integrated by _sigma_rule with n_sigma
    nodes per panel.
    Space: cell-centered |grad(eta w)|^2 times the exact Gaussian mass of each cell,
    summed over the window where that mass clears the floor.
    eta is the radial quintic cutoff about x0 (1 inside cutoff_radius / 2).

    Raises:
        CenterNotZero: |w(center)| > 10 h^(1/2) max|w|
        StripOutsideGrid: strip or cutoff ball not contained in the grid
    """
    grid = w.grid
    if grid.periodic:
        raise StripOutsideGrid("the monotonicity functional needs a bounded domain")
    t0 = float(center[0])
    x0 = [float(c) for c in center[1:]]
    values = sorted(float(r) for r in radii)
    _check_strip(grid, t0, x0, values[-1], cutoff_radius)

    nearest = tuple(int(np.argmin(np.abs(axis - c))) for axis, c in zip(grid.axes, x0))
    w_center = float(_slice_at(w, t0)[nearest])
    if abs(w_center) > CENTER_ZERO_FACTOR * np.sqrt(grid.h) * w.max_abs():
        raise CenterNotZero(f"|w(center)| = {abs(w_center):.3e} is not small")

    mesh = grid.mesh()
    dist = np.sqrt(sum((c - p) ** 2 for c, p in zip(mesh, x0)))
    eta = smooth_cutoff(dist, cutoff_radius)

    phis = []
    for r in values:
        total = 0.0
        for sigma, weight in zip(*_sigma_rule(r, grid.h, n_sigma)):
            tau = sigma * sigma
            window, cell_weights = _gaussian_window(grid, x0, tau)
            energy = _cell_energy(eta[window] * _slice_at(w, t0 - tau, window), grid)
            total += 2.0 * sigma * float(np.sum(energy * cell_weights)) * weight
        phis.append(total / r)

    logger.debug(f"phi series at {tuple(center)}: {list(zip(values, phis))}")
    return PhiSeries(center=tuple(float(c) for c in center), cutoff_radius=float(cutoff_radius), radii=values, values=phis)


@dataclass(frozen=True)
class PhiGrowth:
    fit: Optional[PowerFit]
    bounded: bool

    def to_dict(self) -> dict:
        return {"fit": self.fit.to_dict() if self.fit else None, "bounded": self.bounded}


def phi_growth_fit(series: PhiSeries, tol: float = 0.05) -> PhiGrowth:
    """phi(r) ~ C r^gamma; bounded as r -> 0 when gamma >= -tol."""
    fit = fit_power_law(series.radii, series.values, label="phi_growth")
    bounded = fit is not None and fit.exponent >= -tol
    return PhiGrowth(fit=fit, bounded=bool(bounded))


# --- half-space eigenvalue ------------------------------------------------------

def _gaussian_weight(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return np.exp(-(x1 ** 2 + x2 ** 2) / 4.0)


def _weighted_pair(R: float, n: int) -> tuple[sps.csr_matrix, np.ndarray, np.ndarray, np.ndarray]:
    """Stiffness K (edge weights at midpoints) and lumped mass M on [-R, R] x [0, R], h = R / n."""
    h = R / n
    x1 = -R + h * np.arange(2 * n + 1)
    x2 = h * np.arange(n + 1)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    shape = X1.shape
    idx = np.arange(X1.size).reshape(shape)

    heads, tails, weights = [], [], []
    # edges along x1; rows on x2 = 0 or x2 = R carry half the strip
    w1 = _gaussian_weight(0.5 * (X1[:-1, :] + X1[1:, :]), X2[:-1, :])
    w1[:, 0] *= 0.5
    w1[:, -1] *= 0.5
    heads.append(idx[:-1, :].ravel()); tails.append(idx[1:, :].ravel()); weights.append(w1.ravel())
    w2 = _gaussian_weight(X1[:, :-1], 0.5 * (X2[:, :-1] + X2[:, 1:]))
    w2[0, :] *= 0.5
    w2[-1, :] *= 0.5
    heads.append(idx[:, :-1].ravel()); tails.append(idx[:, 1:].ravel()); weights.append(w2.ravel())

    a, b, w = np.concatenate(heads), np.concatenate(tails), np.concatenate(weights)
    N = X1.size
    K = sps.coo_matrix(
        (np.concatenate([-w, -w, w, w]), (np.concatenate([a, b, a, b]), np.concatenate([b, a, a, b]))),
        shape=(N, N),
    ).tocsr()

    area = np.full(shape, h * h)
    area[[0, -1], :] *= 0.5
    area[:, [0, -1]] *= 0.5
    M = (_gaussian_weight(X1, X2) * area).ravel()
    return K, M, X1, X2


def estimate_halfspace_eigenvalue(
    R: float = 6.0,
    n: int = 96,
    constraint: str = "slit",
    tol: float = EIGEN_TOL,
    max_iters: int = EIGEN_MAX_ITERS,
) -> float:
    """
    Smallest value of int |grad w|^2 e^{-|y|^2/4} / int w^2 e^{-|y|^2/4} on the half-plane
    box [-R, R] x [0, R] with n cells per unit of R along each axis.

    constraint: 'slit' (w = 0 on x2 = 0, x1 <= 0), 'line' (w = 0 on x2 = 0) or 'none'.
    Shifted inverse power iteration on (K + 0.01 M).

    Raises:
        ValueError: unknown constraint
        IterationStalled: Rayleigh quotient not settled within max_iters
    """
    if constraint not in CONSTRAINTS:
        raise ValueError(f"constraint must be one of {CONSTRAINTS}, got '{constraint}'")
    K, M, X1, X2 = _weighted_pair(R, n)

    fixed = np.zeros(X1.shape, dtype=bool)
    if constraint == "slit":
        fixed[:, 0] = X1[:, 0] <= 1e-12
    elif constraint == "line":
        fixed[:, 0] = True
    keep = ~fixed.ravel()
    K = K[keep][:, keep].tocsc()
    m = M[keep]

    lu = spla.splu((K + EIGEN_SHIFT * sps.diags(m)).tocsc())
    x = np.ones(m.size)
    x /= np.sqrt(x @ (m * x))
    lam_prev = float(x @ (K @ x))
    for it in range(1, max_iters + 1):
        x = lu.solve(m * x)
        x /= np.sqrt(x @ (m * x))
        lam = float(x @ (K @ x))
        if abs(lam - lam_prev) <= tol * max(1.0, abs(lam)):
            logger.info(f"Half-space eigenvalue ({constraint}, R={R}, n={n}): {lam:.6f} after {it} iterations")
            return lam
        lam_prev = lam
    raise IterationStalled("inverse power iteration did not settle", residual=abs(lam - lam_prev), iterations=max_iters)
