"""
Free-boundary geometry.

- extract_free_boundary: coincidence masks and sub-cell interface points per level
- parabolic_density: coincidence fraction of backward contact cylinders
- hyperbolic_blowup: u(p + (r x, r t)) / r^(3/2) on a fixed reference lattice
- fit_blowup_profile: traveling-profile fit (speed, rotation) of a blow-up
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar

from src.errors import GapTolTooSmall, RadiiUnresolvable, WindowOutsideGrid
from src.fields import ScalarField
from src.grid import Geometry, Grid, make_grid
from src.profiles import signorini_profile_xy
from src.solvers import SolveResult

logger = logging.getLogger(__name__)

DEFAULT_GAP_FACTOR = 3.0
EXACT_GAP_TOL = 1e-12

BLOWUP_SPACE_NODES = 33
BLOWUP_TIME_LEVELS = 9
FIT_X2_MAX = 0.5
FIT_OMEGA_RANGE = (-2.0, 2.0)
FIT_OMEGA_STEP = 0.01
FIT_ROTATION_RANGE = (-np.pi / 4.0, np.pi / 4.0)
FIT_ROTATION_STEP = np.pi / 80.0
FIT_ACCEPT_RELATIVE = 0.05


@dataclass(frozen=True, eq=False)
class FreeBoundarySnapshot:
    """
    Coincidence mask on the contact set at one level plus interface crossings.

    coordinates holds one array per spatial axis, shaped like the mask
    (the contact line of a half box carries x2 = 0).
    """
    t: float
    level: int
    coincidence_mask: np.ndarray
    interface_points: list
    coordinates: tuple
    h: float
    period: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "level": self.level,
            "coincident_nodes": int(self.coincidence_mask.sum()),
            "interface_points": [list(p) for p in self.interface_points],
        }


def _contact_view(result: SolveResult):
    """(gap array over levels x contact nodes, coordinates, thin?)"""
    grid = result.grid
    gap = result.u.values - result.psi.values
    if grid.geometry == Geometry.HALF_BOX:
        x1 = grid.axes[0]
        return gap[:, :, 0], (x1, np.zeros_like(x1)), True
    return gap, grid.mesh(), False


def _crossings_1d(g: np.ndarray, mask: np.ndarray, x: np.ndarray, tol: float, h: float, period: Optional[float]):
    pairs = list(zip(range(len(g) - 1), range(1, len(g))))
    if period is not None:
        pairs.append((len(g) - 1, 0))
    points = []
    for i, j in pairs:
        if mask[i] == mask[j]:
            continue
        theta = (tol - g[i]) / (g[j] - g[i])
        theta = min(max(theta, 0.0), 1.0)
        pos = x[i] + theta * h
        if period is not None and j == 0:
            pos = x[0] + ((pos - x[0]) % period)
        points.append(float(pos))
    return sorted(points)


def extract_free_boundary(result: SolveResult, gap_tol: Optional[float] = None) -> list[FreeBoundarySnapshot]:
    """
    Per level, mask contact-set nodes with u - psi <= gap_tol and locate interface
    crossings by linear interpolation of u - psi between masked and unmasked neighbours.

    gap_tol defaults to 3 * eps for penalized results and 1e-12 for exact ones.

    Raises:
        GapTolTooSmall: gap_tol below the penalty parameter
    """
    grid = result.grid
    eps = result.eps_used
    if gap_tol is None:
        gap_tol = DEFAULT_GAP_FACTOR * eps if eps > 0 else EXACT_GAP_TOL
    if gap_tol < eps:
        raise GapTolTooSmall(f"gap_tol={gap_tol:g} is below eps={eps:g}")

    gap, coords, thin = _contact_view(result)
    period = (grid.extent[0][1] - grid.extent[0][0]) if grid.periodic else None
    snapshots = []
    for k in range(grid.n_time):
        g = gap[k]
        mask = g <= gap_tol
        points: list = []
        if thin:
            points = [(x, 0.0) for x in _crossings_1d(g, mask, coords[0], gap_tol, grid.h, None)]
        elif grid.dim == 1:
            points = [(x,) for x in _crossings_1d(g, mask, coords[0], gap_tol, grid.h, period)]
        else:
            x1, x2 = grid.axes
            for j in range(g.shape[1]):
                points += [(x, float(x2[j])) for x in _crossings_1d(g[:, j], mask[:, j], x1, gap_tol, grid.h, None)]
            for i in range(g.shape[0]):
                points += [(float(x1[i]), y) for y in _crossings_1d(g[i, :], mask[i, :], x2, gap_tol, grid.h, None)]
            points.sort()
        snapshots.append(
            FreeBoundarySnapshot(
                t=float(grid.times[k]),
                level=k,
                coincidence_mask=mask,
                interface_points=points,
                coordinates=coords,
                h=grid.h,
                period=period,
            )
        )
    logger.debug(f"Free boundary: {sum(len(s.interface_points) for s in snapshots)} interface points over {grid.n_time} levels")
    return snapshots


def interface_trajectory(snapshots: Sequence[FreeBoundarySnapshot]) -> tuple[np.ndarray, np.ndarray]:
    """(t, first interface coordinate) for every level that has an interface point."""
    times = [s.t for s in snapshots if s.interface_points]
    xs = [s.interface_points[0][0] for s in snapshots if s.interface_points]
    return np.array(times), np.array(xs)


# --- density ----------------------------------------------------------------

@dataclass(frozen=True)
class DensityReport:
    point: tuple
    series: list
    c_hat: float

    def to_dict(self) -> dict:
        return {"point": list(self.point), "series": [list(p) for p in self.series], "c_hat": self.c_hat}


def parabolic_density(
    snapshots: Sequence[FreeBoundarySnapshot],
    point: Sequence[float],
    radii: Sequence[float],
) -> DensityReport:
    """
    Fraction of coincident contact-set nodes in the clipped backward cylinder
    {|x - x0| <= r, t0 - r^2 < t <= t0}, point = (t0, x0...).

    Raises:
        RadiiUnresolvable: a radius below two cells
    """
    if not snapshots:
        raise RadiiUnresolvable("no snapshots given")
    first = snapshots[0]
    t0 = float(point[0])
    x0 = [float(p) for p in point[1:]]

    d2 = np.zeros(first.coincidence_mask.shape)
    for c, p in zip(first.coordinates, x0):
        diff = np.abs(c - p)
        if first.period is not None:
            diff = np.minimum(diff, first.period - diff)
        d2 = d2 + diff ** 2
    distance = np.sqrt(d2)

    series = []
    for r in sorted(float(r) for r in radii):
        if r < 2.0 * first.h * (1.0 - 1e-9):
            raise RadiiUnresolvable(f"radius {r} is below two cells (h={first.h})")
        ball = distance <= r + 1e-12
        hits = total = 0
        for snap in snapshots:
            if t0 - r * r < snap.t <= t0 + 1e-12:
                hits += int(np.count_nonzero(snap.coincidence_mask[ball]))
                total += int(np.count_nonzero(ball))
        series.append((r, hits / total if total else 0.0))

    c_hat = min(d for _, d in series)
    return DensityReport(point=tuple(float(p) for p in point), series=series, c_hat=c_hat)


# --- blow-ups -----------------------------------------------------------------

def reference_lattice(grid: Grid, n_space: int = BLOWUP_SPACE_NODES, n_time: int = BLOWUP_TIME_LEVELS) -> Grid:
    """|x| <= 1 (x2 in [0, 1] on half boxes), t in [-1, 1]."""
    if grid.geometry == Geometry.HALF_BOX:
        return make_grid(2, Geometry.HALF_BOX, n_space, n_time, ((-1.0, 1.0), (0.0, 1.0)), T=2.0, t0=-1.0)
    if grid.dim == 2:
        return make_grid(2, Geometry.BOX, n_space, n_time, (-1.0, 1.0), T=2.0, t0=-1.0)
    return make_grid(1, Geometry.BOX, n_space, n_time, (-1.0, 1.0), T=2.0, t0=-1.0)


def hyperbolic_blowup(
    u: ScalarField,
    point: Sequence[float],
    r: float,
    n_space: int = BLOWUP_SPACE_NODES,
    n_time: int = BLOWUP_TIME_LEVELS,
) -> ScalarField:
    """
    u(x0 + r x, t0 + r t) / r^(3/2) on the reference lattice, point = (t0, x0...).

    Interpolation is linear in time and (bi)linear in space.

    Raises:
        WindowOutsideGrid: the scaled window leaves the grid
    """
    grid = u.grid
    ref = reference_lattice(grid, n_space, n_time)
    t0, x0 = float(point[0]), [float(p) for p in point[1:]]

    slack = 1e-12
    if t0 - r < grid.t0 - slack or t0 + r > grid.t0 + grid.horizon + slack:
        raise WindowOutsideGrid(f"time window {t0} +- {r} leaves the grid")
    for axis, ((lo, hi), (rlo, rhi)) in enumerate(zip(grid.extent, ref.extent)):
        if grid.periodic:
            break
        if x0[axis] + r * rlo < lo - slack or x0[axis] + r * rhi > hi + slack:
            raise WindowOutsideGrid(f"space window along axis {axis} leaves the grid")

    mesh = ref.space_time_mesh()
    query = [t0 + r * mesh[0]] + [x0[i] + r * mesh[i + 1] for i in range(grid.dim)]
    if grid.periodic:
        lo, hi = grid.extent[0]
        query[1] = lo + np.mod(query[1] - lo, hi - lo)
        axes = (grid.times, np.append(grid.axes[0], hi))
        values = np.concatenate([u.values, u.values[:, :1]], axis=1)
    else:
        axes = (grid.times,) + grid.axes
        values = u.values
    interp = RegularGridInterpolator(axes, values, method="linear", bounds_error=False, fill_value=None)
    points = np.stack([np.clip(q, a[0], a[-1]) for q, a in zip(query, axes)], axis=-1)
    scaled = interp(points.reshape(-1, len(axes))).reshape(ref.shape) / r ** 1.5
    return ScalarField(ref, scaled, f"{u.label}:blowup(r={r:g})")


@dataclass(frozen=True)
class BlowupFit:
    omega_hat: float
    rotation_hat: float
    linf_error: float
    relative_error: float
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "omega_hat": self.omega_hat,
            "rotation_hat": self.rotation_hat,
            "linf_error": self.linf_error,
            "relative_error": self.relative_error,
            "accepted": self.accepted,
        }


def fit_blowup_profile(rescaled: ScalarField) -> BlowupFit:
    """
    Fit the traveling profile (omega, rotation) to a blow-up by max-norm distance on x2 <= 1/2.

    Coarse grid search (omega step 0.01, rotation step pi/80) followed by alternating
    bounded scalar refinement. The fit is accepted when the error is within 5% of the
    profile's maximum on the compared region.
    """
    grid = rescaled.grid
    if grid.dim != 2:
        raise ValueError("blow-up profile fit needs a two-dimensional lattice")
    t, x1, x2 = grid.space_time_mesh()
    region = x2 <= FIT_X2_MAX + 1e-12
    tt, xx1, xx2 = t[region], x1[region], x2[region]
    target = rescaled.values[region]

    def error(omega: float, rotation: float) -> float:
        return float(np.max(np.abs(target - signorini_profile_xy(xx1, xx2, tt, omega, rotation))))

    omegas = np.arange(FIT_OMEGA_RANGE[0], FIT_OMEGA_RANGE[1] + 0.5 * FIT_OMEGA_STEP, FIT_OMEGA_STEP)
    rotations = np.arange(FIT_ROTATION_RANGE[0], FIT_ROTATION_RANGE[1] + 0.5 * FIT_ROTATION_STEP, FIT_ROTATION_STEP)
    best = (np.inf, 0.0, 0.0)
    for rot in rotations:
        profiles = signorini_profile_xy(xx1[None, :], xx2[None, :], tt[None, :], omegas[:, None], rot)
        errs = np.max(np.abs(target[None, :] - profiles), axis=1)
        i = int(np.argmin(errs))
        if errs[i] < best[0]:
            best = (float(errs[i]), float(omegas[i]), float(rot))

    err, omega, rot = best
    for _ in range(3):
        res = minimize_scalar(lambda w: error(w, rot), bounds=(omega - FIT_OMEGA_STEP, omega + FIT_OMEGA_STEP), method="bounded")
        if res.fun < err:
            err, omega = float(res.fun), float(res.x)
        res = minimize_scalar(lambda a: error(omega, a), bounds=(rot - FIT_ROTATION_STEP, rot + FIT_ROTATION_STEP), method="bounded")
        if res.fun < err:
            err, rot = float(res.fun), float(res.x)

    scale = float(np.max(np.abs(signorini_profile_xy(xx1, xx2, tt, omega, rot))))
    relative = err / scale if scale > 0 else np.inf
    fit = BlowupFit(
        omega_hat=omega,
        rotation_hat=rot,
        linf_error=err,
        relative_error=float(relative),
        accepted=bool(relative <= FIT_ACCEPT_RELATIVE),
    )
    logger.info(f"Blow-up fit: omega={omega:.4f} rotation={rot:.4f} linf={err:.3e} accepted={fit.accepted}")
    return fit
