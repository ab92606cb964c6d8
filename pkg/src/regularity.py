"""
Regularity diagnostics.

- quasiconvexity_check: lower bound on the discrete u_tt against max(|psi_tt|, |bilap phi|)
- min_second_quotient: minimum and location of a second incremental quotient
- time_derivative_modulus: oscillation of (u - psi)_t over backward parabolic windows
- holder_exponent_gradient: growth of |grad(u - psi)| away from the free boundary
- nondegeneracy_l: 3/2-growth constant at a free boundary point
- fit_power_law: log-log least squares shared by every exponent fit
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from src.errors import EmptyFreeBoundary, MissingDerivativeData, RadiiUnresolvable
from src.fields import SampledData, ScalarField
from src.grid import Geometry, Grid
from src.solvers import SolveResult
from src.stencils import gamma_normal_derivative, gradient_norm, second_incremental_quotient

logger = logging.getLogger(__name__)

MIN_FIT_RADII = 4
# Growth faster than this forces the 3/2 limsup to vanish
DEGENERATE_GROWTH = 1.75
DEGENERATE_L = 1e-10


@dataclass(frozen=True)
class PowerFit:
    """value ~ coefficient * r^exponent; residual is the RMS of log-space residuals."""
    exponent: float
    coefficient: float
    residual: float
    r_min: float
    r_max: float
    n_radii: int

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "coefficient": self.coefficient,
            "residual": self.residual,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "n_radii": self.n_radii,
        }


def fit_power_law(radii: Sequence[float], values: Sequence[float], label: str = "fit") -> Optional[PowerFit]:
    """Least-squares slope of log(value) vs log(r); None from fewer than 4 positive samples."""
    r = np.asarray(radii, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = (r > 0) & (y > 0) & np.isfinite(y)
    if int(keep.sum()) < MIN_FIT_RADII:
        logger.warning(f"{label}: {int(keep.sum())} usable radii, no exponent reported")
        return None
    lx, ly = np.log(r[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return PowerFit(
        exponent=float(slope),
        coefficient=float(np.exp(intercept)),
        residual=residual,
        r_min=float(r[keep].min()),
        r_max=float(r[keep].max()),
        n_radii=int(keep.sum()),
    )


def _check_radii(grid: Grid, radii: Sequence[float]) -> list[float]:
    values = sorted(float(r) for r in radii)
    if not values:
        raise RadiiUnresolvable("no radii given")
    if values[0] < 2.0 * grid.h * (1.0 - 1e-9):
        raise RadiiUnresolvable(f"radius {values[0]} is below two cells (h={grid.h})")
    return values


def _time_cells(grid: Grid, r: float) -> int:
    return int(np.floor(r * r / grid.dt + 1e-9))


def _space_cells(grid: Grid, r: float) -> int:
    return int(np.floor(r / grid.h + 1e-9))


def _ball_footprint(grid: Grid, r: float) -> np.ndarray:
    q = _space_cells(grid, r)
    offsets = np.arange(-q, q + 1) * grid.h
    if grid.dim == 1:
        return np.abs(offsets) <= r + 1e-12
    d1, d2 = np.meshgrid(offsets, offsets, indexing="ij")
    return np.hypot(d1, d2) <= r + 1e-12


def _spatial_modes(grid: Grid) -> list[str]:
    return ["wrap" if grid.periodic else "nearest"] * grid.dim


def _backward_running(values: np.ndarray, m: int, reducer) -> np.ndarray:
    """reducer over levels [k - m, k] clipped at level 0."""
    out = values.copy()
    for j in range(1, min(m, values.shape[0] - 1) + 1):
        out[j:] = reducer(out[j:], values[:-j])
    return out


def _cylinder_extrema(values: np.ndarray, grid: Grid, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Max and min of `values` over the clipped backward cylinder at every node."""
    footprint = _ball_footprint(grid, r)[None, ...]
    # The footprint has extent 1 along time, so the time-axis mode is inert;
    # scipy rejects per-axis mode lists for non-separable footprints.
    modes = _spatial_modes(grid)[0]
    hi = ndimage.maximum_filter(values, footprint=footprint, mode=modes)
    lo = ndimage.minimum_filter(values, footprint=footprint, mode=modes)
    m = _time_cells(grid, r)
    return _backward_running(hi, m, np.maximum), _backward_running(lo, m, np.minimum)


# --- quasi-convexity -------------------------------------------------------

@dataclass(frozen=True)
class QuasiConvexityReport:
    utt_min: float
    utt_bound: float
    pass_margin: float
    argmin: tuple
    interior_min: float
    boundary_min: float
    minimizer_on_boundary: bool

    def to_dict(self) -> dict:
        return {
            "utt_min": self.utt_min,
            "utt_bound": self.utt_bound,
            "pass_margin": self.pass_margin,
            "argmin": list(self.argmin),
            "interior_min": self.interior_min,
            "boundary_min": self.boundary_min,
            "minimizer_on_boundary": self.minimizer_on_boundary,
        }


def min_second_quotient(field: ScalarField, direction: Sequence[float], step: float, mask: Optional[np.ndarray] = None):
    """(minimum, (level, *index)) of the second incremental quotient over available nodes in mask."""
    quotient = second_incremental_quotient(field, direction, step)
    full = None if mask is None else np.broadcast_to(mask, field.grid.shape)
    return quotient.min(full), quotient.argmin(full)


def _parabolic_boundary(grid: Grid, available: np.ndarray) -> np.ndarray:
    """Available nodes on the first available level or on a Dirichlet node (the contact line is interior)."""
    levels = np.flatnonzero(available.reshape(grid.n_time, -1).any(axis=1))
    boundary = np.broadcast_to(grid.dirichlet_mask(), grid.shape).copy()
    if levels.size:
        boundary[levels[0]] = True
    return boundary & available


def quasiconvexity_check(
    result: Union[SolveResult, ScalarField],
    data: SampledData,
    tol: float = 0.0,
) -> QuasiConvexityReport:
    """
    utt_min over interior space-time nodes, utt_bound = max(|psi_tt|, |bilap phi|),
    pass_margin = utt_min + utt_bound.

    The parabolic boundary is the first level carrying the quotient plus the
    Dirichlet nodes, where the quotient is that of the lateral data.
    minimizer_on_boundary is True when no interior value lies below the
    boundary minimum by more than tol.

    Raises:
        MissingDerivativeData: psi_tt or bilap_phi not supplied
    """
    if data.psi_tt is None or data.bilap_phi is None:
        raise MissingDerivativeData("quasi-convexity needs analytic psi_tt and bilaplacian of phi")
    u = result.u if isinstance(result, SolveResult) else result
    grid = u.grid

    quotient = second_incremental_quotient(u, [1.0] + [0.0] * grid.dim, grid.dt)
    evaluated = quotient.available & np.broadcast_to(~grid.dirichlet_mask(), grid.shape)
    utt_min = quotient.min(evaluated)
    argmin = quotient.argmin(evaluated)
    utt_bound = max(data.psi_tt.max_abs(), float(np.max(np.abs(data.bilap_phi))))

    boundary = _parabolic_boundary(grid, quotient.available)
    interior = evaluated & ~boundary
    boundary_min = float(np.min(quotient.values[boundary])) if boundary.any() else float("inf")
    interior_min = float(np.min(quotient.values[interior])) if interior.any() else float("inf")
    on_boundary = interior_min >= boundary_min - tol

    report = QuasiConvexityReport(
        utt_min=utt_min,
        utt_bound=utt_bound,
        pass_margin=utt_min + utt_bound,
        argmin=argmin,
        interior_min=interior_min,
        boundary_min=boundary_min,
        minimizer_on_boundary=bool(on_boundary),
    )
    logger.info(f"Quasi-convexity: utt_min={utt_min:.4g} bound={utt_bound:.4g} margin={report.pass_margin:.4g}")
    return report


# --- modulus of (u - psi)_t ------------------------------------------------

@dataclass(frozen=True)
class ModulusReport:
    table: list
    holder_fit: Optional[PowerFit]
    positive_part: bool

    def oscillations(self) -> list[float]:
        return [osc for _, osc in self.table]

    def to_dict(self) -> dict:
        return {
            "table": [list(pair) for pair in self.table],
            "holder_fit": self.holder_fit.to_dict() if self.holder_fit else None,
            "positive_part": self.positive_part,
        }


def time_derivative_modulus(
    source: Union[SolveResult, ScalarField],
    radii: Sequence[float],
    positive_part: bool = True,
    centers_mask: Optional[np.ndarray] = None,
) -> ModulusReport:
    """
    Oscillation of v (or v+) over backward windows {|x - x0| <= r, t0 - r^2 <= t <= t0},
    maximized over centers (optionally restricted by centers_mask, spatial or space-time).

    Raises:
        RadiiUnresolvable: a radius below two cells
    """
    field = source.v if isinstance(source, SolveResult) else source
    grid = field.grid
    values = np.maximum(field.values, 0.0) if positive_part else np.array(field.values)
    centers = None if centers_mask is None else np.broadcast_to(np.asarray(centers_mask, dtype=bool), grid.shape)

    table = []
    for r in _check_radii(grid, radii):
        hi, lo = _cylinder_extrema(values, grid, r)
        spread = hi - lo
        osc = float(np.max(spread if centers is None else spread[centers])) if (centers is None or centers.any()) else 0.0
        table.append((r, osc))

    fit = fit_power_law([r for r, _ in table], [o for _, o in table], label="time_derivative_modulus")
    logger.debug(f"Modulus table: {table}")
    return ModulusReport(table=table, holder_fit=fit, positive_part=positive_part)


# --- gradient Hoelder exponent ----------------------------------------------

@dataclass(frozen=True)
class GradientHolderReport:
    point: tuple
    level: int
    radii: list
    gradient_sup: list
    fit: Optional[PowerFit]
    gamma_sup: list
    gamma_fit: Optional[PowerFit]

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "level": self.level,
            "radii": list(self.radii),
            "gradient_sup": list(self.gradient_sup),
            "fit": self.fit.to_dict() if self.fit else None,
            "gamma_sup": list(self.gamma_sup),
            "gamma_fit": self.gamma_fit.to_dict() if self.gamma_fit else None,
        }


def _latest_interface(snapshots) -> tuple[int, tuple]:
    for snap in reversed(list(snapshots)):
        if snap.interface_points:
            return snap.level, tuple(snap.interface_points[0])
    raise EmptyFreeBoundary("no interface point in any snapshot")


def _space_distance(grid: Grid, point: Sequence[float]) -> np.ndarray:
    coords = grid.mesh()
    d2 = np.zeros(grid.space_shape)
    for axis, (c, p) in enumerate(zip(coords, point)):
        diff = np.abs(c - p)
        if grid.periodic and axis == 0:
            length = grid.extent[0][1] - grid.extent[0][0]
            diff = np.minimum(diff, length - diff)
        d2 += diff ** 2
    return np.sqrt(d2)


def holder_exponent_gradient(
    result: SolveResult,
    snapshots,
    radii: Sequence[float],
) -> GradientHolderReport:
    """
    sup of |grad(u - psi)| over backward cylinders of radius d at the latest interface
    point, fitted against d; on half boxes also sup of |d(u - psi)/dx2| along the contact line.

    Raises:
        EmptyFreeBoundary: no snapshot has an interface point
        RadiiUnresolvable: a radius below two cells
    """
    grid = result.grid
    level, point = _latest_interface(snapshots)
    values = _check_radii(grid, radii)
    gap = result.u.values - result.psi.values
    distance = _space_distance(grid, point)
    on_gamma = grid.geometry == Geometry.HALF_BOX

    grad_levels = {}
    gamma_levels = {}

    def level_grad(k):
        if k not in grad_levels:
            grad_levels[k] = gradient_norm(gap[k], grid)
        return grad_levels[k]

    def level_gamma(k):
        if k not in gamma_levels:
            gamma_levels[k] = np.abs(gamma_normal_derivative(gap[k], grid))
        return gamma_levels[k]

    gradient_sup, gamma_sup = [], []
    for d in values:
        first = max(0, level - _time_cells(grid, d))
        ball = distance <= d + 1e-12
        gradient_sup.append(max(float(np.max(level_grad(k)[ball])) for k in range(first, level + 1)))
        if on_gamma:
            line = ball[:, 0]
            gamma_sup.append(max(float(np.max(level_gamma(k)[line])) for k in range(first, level + 1)))

    fit = fit_power_law(values, gradient_sup, label="gradient_holder")
    gamma_fit = fit_power_law(values, gamma_sup, label="gamma_gradient_holder") if on_gamma else None
    if fit is not None:
        logger.info(f"Gradient Hoelder fit at {point} level {level}: exponent={fit.exponent:.3f} residual={fit.residual:.3g}")
    return GradientHolderReport(
        point=tuple(float(p) for p in point),
        level=level,
        radii=values,
        gradient_sup=gradient_sup,
        fit=fit,
        gamma_sup=gamma_sup,
        gamma_fit=gamma_fit,
    )


# --- non-degeneracy -----------------------------------------------------------

@dataclass(frozen=True)
class NondegeneracyReport:
    point: tuple
    radii: list
    sup_values: list
    l_hat: float
    fit: Optional[PowerFit]
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "point": list(self.point),
            "radii": list(self.radii),
            "sup_values": list(self.sup_values),
            "l_hat": self.l_hat,
            "fit": self.fit.to_dict() if self.fit else None,
            "degenerate": self.degenerate,
        }


def nondegeneracy_l(u: ScalarField, point: Sequence[float], radii: Sequence[float]) -> NondegeneracyReport:
    """
    S(r) = sup |u| over the space-time ball of radius r about point = (t, x1[, x2]).

    l_hat is the geometric mean of S(r) / r^(3/2) over the four smallest radii. On a half
    box the ball is taken in x2 >= 0 (the field is read as evenly reflected).

    Raises:
        RadiiUnresolvable: radius below two cells or ball leaving the grid
    """
    grid = u.grid
    values = _check_radii(grid, radii)
    t0, x0 = float(point[0]), tuple(float(p) for p in point[1:])
    if len(x0) != grid.dim:
        raise ValueError(f"point needs {grid.dim + 1} coordinates (t, x...)")

    r_max = values[-1]
    if t0 - r_max < grid.t0 - 1e-12 or t0 + r_max > grid.t0 + grid.horizon + 1e-12:
        raise RadiiUnresolvable(f"time extent of radius {r_max} leaves [t0, t0 + T]")
    for axis, (lo, hi) in enumerate(grid.extent):
        if grid.periodic:
            break
        lower_ok = x0[axis] - r_max >= lo - 1e-12 or (axis == 1 and grid.geometry == Geometry.HALF_BOX)
        if not lower_ok or x0[axis] + r_max > hi + 1e-12:
            raise RadiiUnresolvable(f"ball of radius {r_max} leaves the grid along axis {axis}")

    dt_offsets = grid.times - t0
    space_dist = _space_distance(grid, x0)
    magnitude = np.abs(u.values)
    sups = []
    for r in values:
        levels = np.flatnonzero(np.abs(dt_offsets) <= r + 1e-12)
        best = 0.0
        for k in levels:
            ball = space_dist ** 2 + dt_offsets[k] ** 2 <= r * r + 1e-12
            if ball.any():
                best = max(best, float(np.max(magnitude[k][ball])))
        sups.append(best)

    smallest = np.array(sups[:MIN_FIT_RADII]) / np.array(values[:MIN_FIT_RADII]) ** 1.5
    l_hat = float(np.exp(np.mean(np.log(smallest)))) if np.all(smallest > 0) else 0.0
    fit = fit_power_law(values, sups, label="nondegeneracy") if l_hat > 0 else None
    degenerate = l_hat <= DEGENERATE_L or (fit is not None and fit.exponent > DEGENERATE_GROWTH)
    logger.info(f"Non-degeneracy at {tuple(point)}: l_hat={l_hat:.4g} degenerate={degenerate}")
    return NondegeneracyReport(
        point=tuple(float(p) for p in point),
        radii=values,
        sup_values=sups,
        l_hat=l_hat,
        fit=fit,
        degenerate=bool(degenerate),
    )
