"""
Regularity report (regularity_report.v1).

Collects every diagnostic that applies to one solve result:
- quasi-convexity margin (when analytic psi_tt and bilap phi are available)
- modulus table of (u - psi)_t+ with its Hoelder fit
- gradient Hoelder fit near the free boundary
- phi series, half-space eigenvalue and blow-up fit (contact-line geometries)
- parabolic density and non-degeneracy constant at an interface point

A diagnostic that cannot run on the given geometry is reported as null with a note.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src.errors import ObstacleLabError
from src.fields import SampledData, ScalarField
from src.free_boundary import (
    extract_free_boundary,
    fit_blowup_profile,
    hyperbolic_blowup,
    parabolic_density,
)
from src.grid import Geometry, Grid
from src.monotonicity import estimate_halfspace_eigenvalue, monotonicity_functional, phi_growth_fit
from src.regularity import holder_exponent_gradient, nondegeneracy_l, quasiconvexity_check, time_derivative_modulus
from src.solvers import SolveResult

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "regularity_report.v1"
MANDATORY_KEYS = (
    "utt_min",
    "utt_bound",
    "modulus_table",
    "holder_fit",
    "phi_series",
    "lambda_hat",
    "density_series",
    "l_hat",
    "omega_hat",
    "blowup_error",
)
DEFAULT_RADII_COUNT = 6
# Level set used for the gradient fit on penalized runs, in units of eps
GRADIENT_GAP_FACTOR = 1.1
PHI_R_MAX = 0.4


def default_radii(grid: Grid, r_cap: Optional[float] = None, count: int = DEFAULT_RADII_COUNT) -> list[float]:
    """Geometric radii from two cells up to one decade (or r_cap, if smaller)."""
    r_min = 2.0 * grid.h
    r_max = 10.0 * r_min
    if r_cap is not None:
        r_max = min(r_max, r_cap)
    if r_max <= r_min * (1.0 + 1e-9):
        return []
    return [float(r) for r in np.geomspace(r_min, r_max, count)]


@dataclass
class RegularityReport:
    name: str
    prototype: str
    eps_used: float
    utt_min: Optional[float] = None
    utt_bound: Optional[float] = None
    pass_margin: Optional[float] = None
    minimizer_on_boundary: Optional[bool] = None
    modulus_table: list = field(default_factory=list)
    holder_fit: Optional[dict] = None
    gradient_fit: Optional[dict] = None
    gamma_gradient_fit: Optional[dict] = None
    phi_series: list = field(default_factory=list)
    phi_growth: Optional[dict] = None
    lambda_hat: Optional[float] = None
    density_series: list = field(default_factory=list)
    c_hat: Optional[float] = None
    l_hat: Optional[float] = None
    nondegeneracy_fit: Optional[dict] = None
    omega_hat: Optional[float] = None
    rotation_hat: Optional[float] = None
    blowup_error: Optional[float] = None
    anchor_point: Optional[list] = None
    initial_forcing_margin: Optional[float] = None
    notes: list = field(default_factory=list)

    def note(self, section: str, exc: Exception) -> None:
        message = f"{section}: {type(exc).__name__}: {exc}"
        logger.warning(f"Report '{self.name}' skipped {message}")
        self.notes.append(message)

    def to_dict(self) -> dict:
        out = {key: getattr(self, key) for key in self.__dataclass_fields__}
        out["schema_version"] = SCHEMA_VERSION
        return out

    def modulus_rows(self) -> list[list]:
        return [["r", "oscillation"]] + [list(pair) for pair in self.modulus_table]

    def density_rows(self) -> list[list]:
        return [["r", "density"]] + [list(pair) for pair in self.density_series]

    def phi_rows(self) -> list[list]:
        return [["r", "phi"]] + [list(pair) for pair in self.phi_series]


def plots_manifest() -> dict:
    """Suggested axes for the CSV series; nothing is rendered."""
    return {
        "schema_version": "plots.v1",
        "plots": [
            {"file": "modulus.csv", "x": "r", "y": "oscillation", "log_x": True, "log_y": True},
            {"file": "density.csv", "x": "r", "y": "density", "log_x": True, "log_y": False},
            {"file": "phi.csv", "x": "r", "y": "phi", "log_x": True, "log_y": False},
            {"file": "sweep.csv", "x": "eps", "y": "error", "log_x": True, "log_y": True},
        ],
    }


def _anchor(snapshots, grid: Grid) -> Optional[tuple[int, tuple]]:
    """Interface point at the level closest to mid-horizon."""
    mid = grid.n_time // 2
    candidates = [s for s in snapshots if s.interface_points]
    if not candidates:
        return None
    snap = min(candidates, key=lambda s: (abs(s.level - mid), s.level))
    return snap.level, (snap.t,) + tuple(snap.interface_points[0])


def _room(grid: Grid, point: Sequence[float]) -> float:
    """Largest space-time radius about point = (t, x...) that stays inside the grid."""
    t = float(point[0])
    room = min(t - grid.t0, grid.t0 + grid.horizon - t)
    for axis, (lo, hi) in enumerate(grid.extent):
        if grid.periodic:
            break
        x = float(point[1 + axis])
        if not (axis == 1 and grid.geometry == Geometry.HALF_BOX):
            room = min(room, x - lo)
        room = min(room, hi - x)
    return room


def build_regularity_report(
    result: SolveResult,
    data: Optional[SampledData] = None,
    radii: Optional[Sequence[float]] = None,
    eigen_truncation: float = 6.0,
    eigen_resolution: int = 96,
    initial_forcing_margin: Optional[float] = None,
) -> RegularityReport:
    grid = result.grid
    report = RegularityReport(
        name=result.name,
        prototype=result.prototype.value,
        eps_used=result.eps_used,
        initial_forcing_margin=initial_forcing_margin,
    )
    radii = list(radii) if radii else default_radii(grid)
    half_box = grid.geometry == Geometry.HALF_BOX

    if data is not None and data.psi_tt is not None and data.bilap_phi is not None and grid.n_time >= 3:
        qc = quasiconvexity_check(result, data)
        report.utt_min, report.utt_bound = qc.utt_min, qc.utt_bound
        report.pass_margin, report.minimizer_on_boundary = qc.pass_margin, qc.minimizer_on_boundary
    else:
        report.notes.append("quasiconvexity: analytic psi_tt / bilap phi not available")

    try:
        modulus = time_derivative_modulus(result, radii, positive_part=True)
        report.modulus_table = [list(pair) for pair in modulus.table]
        report.holder_fit = modulus.holder_fit.to_dict() if modulus.holder_fit else None
    except ObstacleLabError as exc:
        report.note("modulus", exc)

    gradient_tol = GRADIENT_GAP_FACTOR * result.eps_used if result.eps_used > 0 else None
    try:
        gradient = holder_exponent_gradient(result, extract_free_boundary(result, gradient_tol), radii)
        report.gradient_fit = gradient.fit.to_dict() if gradient.fit else None
        report.gamma_gradient_fit = gradient.gamma_fit.to_dict() if gradient.gamma_fit else None
    except ObstacleLabError as exc:
        report.note("gradient", exc)

    snapshots = extract_free_boundary(result)
    anchor = _anchor(snapshots, grid)
    if anchor is None:
        report.notes.append("free boundary: no interface point")
    else:
        level, point = anchor
        report.anchor_point = list(point)
        gap = result.u - result.psi
        try:
            density = parabolic_density(snapshots, point, radii)
            report.density_series = [list(pair) for pair in density.series]
            report.c_hat = density.c_hat
        except ObstacleLabError as exc:
            report.note("density", exc)
        try:
            local = default_radii(grid, r_cap=_room(grid, point))
            if not local:
                raise ValueError("no room for a space-time ball at the interface point")
            nondeg = nondegeneracy_l(gap, point, local)
            report.l_hat = nondeg.l_hat
            report.nondegeneracy_fit = nondeg.fit.to_dict() if nondeg.fit else None
        except (ObstacleLabError, ValueError) as exc:
            report.note("nondegeneracy", exc)
        if half_box:
            _blowup_section(report, gap, point, grid)

    if half_box:
        _phi_section(report, result, snapshots, grid)
        try:
            report.lambda_hat = estimate_halfspace_eigenvalue(R=eigen_truncation, n=eigen_resolution)
        except ObstacleLabError as exc:
            report.note("eigenvalue", exc)
    else:
        report.notes.append("phi / eigenvalue / blow-up: need a contact line")

    logger.info(
        f"Regularity report '{report.name}': holder={_exponent(report.holder_fit)} "
        f"gradient={_exponent(report.gradient_fit)} l_hat={report.l_hat} omega_hat={report.omega_hat}"
    )
    return report


def _exponent(fit: Optional[dict]):
    return None if fit is None else round(fit["exponent"], 4)


def _blowup_section(report: RegularityReport, gap: ScalarField, point: tuple, grid: Grid) -> None:
    r = 0.9 * _room(grid, point)
    try:
        if r < 2.0 * grid.h:
            raise ValueError(f"blow-up radius {r:.3g} is below two cells")
        fit = fit_blowup_profile(hyperbolic_blowup(gap, point, r))
        report.omega_hat, report.rotation_hat = fit.omega_hat, fit.rotation_hat
        report.blowup_error = fit.relative_error
    except (ObstacleLabError, ValueError) as exc:
        report.note("blowup", exc)


def _phi_section(report: RegularityReport, result: SolveResult, snapshots, grid: Grid) -> None:
    latest = next((s for s in reversed(snapshots) if s.interface_points), None)
    if latest is None:
        return
    x1 = float(latest.interface_points[0][0])
    (lo, hi), (_, top) = grid.extent
    cutoff = 0.9 * min(x1 - lo, hi - x1, top)
    r_cap = min(np.sqrt(latest.t - grid.t0), PHI_R_MAX, cutoff)
    radii = default_radii(grid, r_cap=r_cap)
    try:
        if len(radii) < 2:
            raise ValueError("strip too short for a phi series")
        gap = result.u.values - result.psi.values
        w = ScalarField(grid, np.gradient(gap, grid.h, axis=2, edge_order=2), "d(u-psi)/dx2")
        series = monotonicity_functional(w, (latest.t, x1, 0.0), radii, cutoff)
        report.phi_series = [[r, v] for r, v in zip(series.radii, series.values)]
        report.phi_growth = phi_growth_fit(series).to_dict()
    except (ObstacleLabError, ValueError) as exc:
        report.note("phi", exc)
