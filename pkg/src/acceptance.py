"""
Acceptance suite evaluator (verify_report.v1).

Deterministic order and stable criterion names. Each criterion returns
(passed, detail, metrics); an exception inside a criterion is a failure
with reason "ERROR: <type>: <msg>", never a skip.
"""
import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sps
from scipy.integrate import trapezoid

from src.discretization import build_step_operator
from src.errors import ConfigInvalid
from src.fields import SampledData, ScalarField
from src.free_boundary import (
    extract_free_boundary,
    fit_blowup_profile,
    hyperbolic_blowup,
    interface_trajectory,
    parabolic_density,
)
from src.grid import Geometry, Grid, make_grid
from src.kernels import heat_kernel_r2
from src.monotonicity import estimate_halfspace_eigenvalue, monotonicity_functional, PhiSeries
from src.oracle import LcpStepProblem, psor_solve, solve_reference
from src.penalty import EXP_FLOOR, PenaltyParams, beta_and_prime, penalty_beta
from src.problems import Prototype, ProblemSpec, build_builtin, builtin_grid, closed_form_field
from src.regularity import holder_exponent_gradient, nondegeneracy_l, quasiconvexity_check, time_derivative_modulus
from src.report import default_radii
from src.solvers import SolveResult, march, march_unconstrained
from src.stencils import fd_laplacian
from src.sweep import eps_sweep

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "verify_report.v1"

# Criterion names (stable strings)
PENALTY_CONVERGENCE = "PENALTY_CONVERGENCE"
QUASICONVEXITY = "QUASICONVEXITY"
HALFSPACE_EIGENVALUE = "HALFSPACE_EIGENVALUE"
MONOTONICITY_FORMULA = "MONOTONICITY_FORMULA"
OPTIMAL_REGULARITY = "OPTIMAL_REGULARITY"
BLOWUP_PROFILE = "BLOWUP_PROFILE"
FREE_BOUNDARY_GEOMETRY = "FREE_BOUNDARY_GEOMETRY"
TIME_DERIVATIVE_CONTINUITY = "TIME_DERIVATIVE_CONTINUITY"
FRACTIONAL_CONSISTENCY = "FRACTIONAL_CONSISTENCY"
INVARIANT_SUITES = "INVARIANT_SUITES"

TRAVELING_OMEGA = 0.3
RICHARDSON_SAFETY = 1.5
PHI_SLACK = 1e-3
MONOTONICITY_LEVELS = (64, 128, 256)


@dataclass(frozen=True)
class AcceptanceContext:
    jobs: int = 1
    seed: int = 0


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "metrics": self.metrics}


CriterionCheck = Callable[[AcceptanceContext], tuple[bool, str, dict]]


# --- shared fixtures ----------------------------------------------------------

def _closed_form_result(name: str, grid: Grid) -> SolveResult:
    u = closed_form_field(name, grid)
    psi = ScalarField(grid, np.zeros(grid.shape), "psi")
    return SolveResult.from_fields(u, psi, Prototype.SIGNORINI, f"{name}:closed_form")


def _traveling_result(n_space: int = 129, n_time: int = 129, T: float = 0.5) -> SolveResult:
    return _closed_form_result("signorini-traveling", builtin_grid("signorini-traveling", n_space, n_time, T))


def _interior_centers(grid: Grid, time_fraction: float = 0.5, margin_fraction: float = 0.25) -> np.ndarray:
    """Space-time mask of centers at least margin_fraction of each axis away from Dirichlet sides."""
    inside = np.ones(grid.space_shape, dtype=bool)
    for axis, ((lo, hi), coords) in enumerate(zip(grid.extent, grid.mesh())):
        margin = margin_fraction * (hi - lo)
        if not (axis == 1 and grid.geometry == Geometry.HALF_BOX):
            inside &= coords >= lo + margin - 1e-12
        inside &= coords <= hi - margin + 1e-12
    late = grid.times >= grid.t0 + time_fraction * grid.horizon - 1e-12
    return late[(slice(None),) + (None,) * grid.dim] & inside[None, ...]


def _richardson_constant(q: Sequence[float], d: Sequence[float]) -> float:
    """C in d ~ C q from the two finest grids, clamped at 0."""
    if q[-2] == q[-1]:
        return 0.0
    return max(0.0, (d[-2] - d[-1]) / (q[-2] - q[-1]))


def _richardson_series(levels: Sequence[PhiSeries]) -> list[float]:
    """
    phi_h - 4 phi_{h/2} + 4 phi_{h/4} across two halvings of h.

    Cancels error terms in h / r and (h / r) ln(h / r).
    """
    coarse, mid, fine = levels
    return [a - 4.0 * b + 4.0 * c for a, b, c in zip(coarse.values, mid.values, fine.values)]


def _fmt(value: Optional[float], spec: str = ".4g") -> str:
    return "n/a" if value is None else format(value, spec)


# --- criteria -----------------------------------------------------------------

def check_penalty_convergence(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    spec, grid = build_builtin("thick-active", n_space=257, n_time=129)
    table = eps_sweep(spec, grid, (1e-1, 1e-2, 1e-3), jobs=ctx.jobs)
    within = [row.error <= 3.0 * row.eps for row in table.rows]
    decreasing = table.errors_strictly_decreasing()
    errors = table.column("error")
    detail = "errors " + ", ".join(f"{e:.2e}@{row.eps:g}" for e, row in zip(errors, table.rows))
    detail += f" (<= 3 eps: {all(within)}, strictly decreasing: {decreasing})"
    return all(within) and decreasing, detail, {"table": table.to_dict()}


def check_quasiconvexity(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    levels = ((17, 17), (33, 33), (65, 65))
    runs = []
    for n_space, n_time in levels:
        spec, grid = build_builtin("thick-separated", n_space=n_space, n_time=n_time)
        result = march(spec, grid)
        runs.append((grid, spec.data, result, quasiconvexity_check(result, spec.data)))

    q = [grid.h ** 2 + grid.dt for grid, *_ in runs]
    bound = runs[-1][3].utt_bound
    margin_defect = [max(0.0, -report.pass_margin) for *_, report in runs]
    c_margin = _richardson_constant(q, margin_defect)

    margin_tol = RICHARDSON_SAFETY * c_margin * q[-1] + 1e-3 * bound
    margin_ok = runs[-1][3].pass_margin >= -margin_tol
    # u_tt ~ psi_tt = 0 on the contact set; zero lateral data keep the boundary minimum <= 0
    flags = [report.minimizer_on_boundary for *_, report in runs]

    detail = (
        f"margin={runs[-1][3].pass_margin:.4g} >= -{margin_tol:.2e}: {margin_ok}; "
        f"minimizer on parabolic boundary {flags}"
    )
    metrics = {
        "grids": [list(lv) for lv in levels],
        "pass_margin": [report.pass_margin for *_, report in runs],
        "utt_min": [report.utt_min for *_, report in runs],
        "interior_min": [report.interior_min for *_, report in runs],
        "boundary_min": [report.boundary_min for *_, report in runs],
        "utt_bound": bound,
        "richardson_c": c_margin,
        "minimizer_on_boundary": flags,
    }
    return margin_ok and all(flags), detail, metrics


def check_halfspace_eigenvalue(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    slit = estimate_halfspace_eigenvalue(R=6.0, n=96, constraint="slit")
    free = estimate_halfspace_eigenvalue(R=6.0, n=96, constraint="none")
    line = estimate_halfspace_eigenvalue(R=6.0, n=96, constraint="line")
    ok_slit = 0.225 <= slit <= 0.275
    ok_free = abs(free) <= 1e-8
    ok_line = abs(line - 0.5) <= 0.05
    detail = f"slit={slit:.4f} in [0.225, 0.275]: {ok_slit}; none={free:.1e}; line={line:.4f}"
    return ok_slit and ok_free and ok_line, detail, {"slit": slit, "none": free, "line": line}


def _half_plane_field(kind: str, h_inverse: int, R: float = 5.0, T: float = 0.16) -> ScalarField:
    grid = make_grid(2, Geometry.HALF_BOX, int(2 * R * h_inverse) + 1, 3, ((-R, R), (0.0, R)), T=T)
    x1, x2 = grid.mesh()
    rho = np.hypot(x1, x2)
    if kind == "normal":
        # d/dx2 of the stationary profile: -rho^(1/2) sin(theta/2)
        return ScalarField.constant_in_time(grid, -np.sqrt(np.maximum(0.5 * (rho - x1), 0.0)), "du0/dx2")
    return ScalarField.constant_in_time(grid, np.sqrt(np.maximum(0.5 * (rho + x1), 0.0)), "homogeneous_half")


def check_monotonicity_formula(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    radii = [float(r) for r in np.geomspace(0.05, 0.4, 6)]
    R, T = 5.0, 0.16
    center = (T, 0.0, 0.0)
    series = {}
    for kind in ("normal", "control"):
        levels = [
            monotonicity_functional(_half_plane_field(kind, h_inverse, R, T), center, radii, cutoff_radius=R)
            for h_inverse in MONOTONICITY_LEVELS
        ]
        series[kind] = _richardson_series(levels)
    normal_x, control_x = series["normal"], series["control"]

    control_spread = (max(control_x) - min(control_x)) / float(np.mean(control_x))
    monotone = all(b >= a - PHI_SLACK * abs(a) for a, b in zip(normal_x, normal_x[1:]))
    constant = control_spread <= 0.01
    detail = (
        f"phi nondecreasing (slack {PHI_SLACK:.0e}): {monotone}; "
        f"control spread={control_spread:.2e} <= 1%: {constant}"
    )
    metrics = {
        "radii": radii,
        "h_inverse": list(MONOTONICITY_LEVELS),
        "phi": normal_x,
        "control": control_x,
        "slack": PHI_SLACK,
        "control_spread": control_spread,
    }
    return monotone and constant, detail, metrics


def check_optimal_regularity(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    grid = builtin_grid("signorini-stationary", n_space=129, n_time=33)
    exact = _closed_form_result("signorini-stationary", grid)
    exact_fit = holder_exponent_gradient(exact, extract_free_boundary(exact), default_radii(grid)).fit
    exact_ok = exact_fit is not None and abs(exact_fit.exponent - 0.5) <= 0.1

    penalized = []
    eps = 1e-3
    for n_space, n_time in ((33, 17), (65, 33), (129, 65)):
        spec, g = build_builtin("signorini-active", n_space=n_space, n_time=n_time, eps=eps)
        result = march(spec, g)
        snapshots = extract_free_boundary(result, gap_tol=1.1 * eps)
        penalized.append(holder_exponent_gradient(result, snapshots, default_radii(g)).fit)
    finest = penalized[-1]
    penalized_ok = finest is not None and 0.4 <= finest.exponent <= 0.6 and finest.residual <= 0.1

    detail = (
        f"profile exponent={_fmt(exact_fit.exponent if exact_fit else None)}; "
        f"penalized exponents={[_fmt(f.exponent if f else None) for f in penalized]}"
        f" residual={_fmt(finest.residual if finest else None, '.3f')}"
    )
    metrics = {
        "profile_fit": exact_fit.to_dict() if exact_fit else None,
        "penalized_fits": [f.to_dict() if f else None for f in penalized],
    }
    return exact_ok and penalized_ok, detail, metrics


def check_blowup_profile(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    result = _traveling_result()
    grid = result.grid
    t0 = 0.5 * grid.horizon
    point = (t0, -TRAVELING_OMEGA * t0, 0.0)
    fit = fit_blowup_profile(hyperbolic_blowup(result.u, point, 0.2))
    radii = [float(r) for r in np.geomspace(2.0 * grid.h, 0.2, 6)]
    nondeg = nondegeneracy_l(result.u, point, radii)

    fit_ok = 0.27 <= fit.omega_hat <= 0.33 and abs(fit.rotation_hat) <= 0.03 and fit.relative_error <= 0.05
    growth = nondeg.fit.exponent if nondeg.fit else None
    nondeg_ok = growth is not None and abs(growth - 1.5) <= 0.05 and abs(nondeg.l_hat - 2.0 / 3.0) <= (2.0 / 3.0) * 0.1
    detail = (
        f"omega={fit.omega_hat:.3f} rotation={fit.rotation_hat:.3f} error={fit.relative_error:.2%}; "
        f"growth={_fmt(growth, '.3f')} l_hat={nondeg.l_hat:.3f}"
    )
    return fit_ok and nondeg_ok, detail, {"blowup": fit.to_dict(), "nondegeneracy": nondeg.to_dict()}


def check_free_boundary_geometry(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    result = _traveling_result()
    grid = result.grid
    snapshots = extract_free_boundary(result)
    times, xs = interface_trajectory(snapshots)
    if times.size < 2:
        return False, "no interface trajectory", {}
    deviation = float(np.max(np.abs(xs + TRAVELING_OMEGA * times)))
    slope = float(np.polyfit(times, xs, 1)[0])
    linear_ok = deviation <= 2.0 * grid.h

    radii = [4.0 * grid.h, 8.0 * grid.h, 16.0 * grid.h]
    densities = []
    for snap in snapshots[::4]:
        if snap.interface_points:
            point = (snap.t,) + tuple(snap.interface_points[0])
            densities.extend(d for _, d in parabolic_density(snapshots, point, radii).series)
    density_ok = bool(densities) and all(0.4 <= d <= 0.6 for d in densities)
    detail = (
        f"slope={slope:.4f} (omega={TRAVELING_OMEGA}) max deviation={deviation:.2e} <= 2h: {linear_ok}; "
        f"density in [{min(densities, default=float('nan')):.3f}, {max(densities, default=float('nan')):.3f}]"
    )
    metrics = {"slope": slope, "deviation": deviation, "h": grid.h, "density_min": min(densities, default=None),
               "density_max": max(densities, default=None)}
    return linear_ok and density_ok, detail, metrics


def check_time_derivative_continuity(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    ok = True
    parts = []
    metrics = {}
    for name, n_space, n_time in (("thick-active", 257, 129), ("signorini-active", 129, 65)):
        exponents = []
        for eps in (1e-2, 1e-3):
            spec, grid = build_builtin(name, n_space=n_space, n_time=n_time, eps=eps)
            result = march(spec, grid)
            radii = default_radii(grid, r_cap=float(np.sqrt(0.25 * grid.horizon)))
            report = time_derivative_modulus(result, radii, positive_part=True, centers_mask=_interior_centers(grid))
            oscillations = report.oscillations()
            monotone = all(b >= a for a, b in zip(oscillations, oscillations[1:]))
            exponent = report.holder_fit.exponent if report.holder_fit else None
            exponents.append(exponent)
            ok &= monotone and exponent is not None and exponent > 0
            metrics[f"{name}@{eps:g}"] = report.to_dict()
        if None not in exponents:
            variation = abs(exponents[0] - exponents[1]) / max(abs(exponents[0]), abs(exponents[1]))
            ok &= variation <= 0.15
        else:
            variation = None
        parts.append(f"{name} alpha={[_fmt(e, '.3f') for e in exponents]} variation={_fmt(variation, '.1%')}")
    return bool(ok), "; ".join(parts), metrics


def _single_mode_factor(k: int = 3, n_space: int = 128, dt: float = 1e-2) -> float:
    grid = make_grid(1, Geometry.PERIODIC_LINE, n_space, 3, ((0.0, 2.0 * np.pi),), T=2.0 * dt)
    (x,) = grid.axes
    mode = np.cos(k * x)
    zeros = ScalarField(grid, np.zeros(grid.shape), "zero")
    data = SampledData(
        psi=ScalarField(grid, np.full(grid.shape, -10.0), "psi"),
        phi0=mode,
        lateral=zeros,
        f=zeros,
    )
    spec = ProblemSpec(Prototype.FRACTIONAL, data, PenaltyParams(1e-2), T=grid.horizon, s=1.0, name="single-mode")
    u = march(spec, grid).u.values
    return float(u[1] @ mode / (u[0] @ mode))


def check_fractional_consistency(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    base, grid = build_builtin("fractional-active")
    eps = base.eps.eps
    errors = {}
    for s in (0.25, 0.5, 0.75):
        spec = base.with_s(s)
        penalized = march(spec, grid)
        reference = solve_reference(spec, grid)
        errors[s] = float(np.max(np.abs(penalized.u.values - reference.u.values)))
    within = all(e <= 3.0 * eps for e in errors.values())

    k, dt = 3, 1e-2
    factor = _single_mode_factor(k=k, dt=dt)
    expected = 1.0 / (1.0 + dt * k * k)
    decay_ok = abs(factor - expected) <= 1e-12
    detail = (
        "errors " + ", ".join(f"s={s}: {e:.2e}" for s, e in errors.items())
        + f" (<= 3 eps: {within}); decay factor error={abs(factor - expected):.1e}"
    )
    return within and decay_ok, detail, {"errors": {str(s): e for s, e in errors.items()}, "decay_factor": factor}


# --- invariant suites -----------------------------------------------------------

def _penalty_scan() -> bool:
    s = np.linspace(-1.0, 1.0, 100_001)
    for eps in (1e-1, 1e-2, 1e-3):
        beta, prime = beta_and_prime(PenaltyParams(eps), s)
        if not (np.all(np.diff(beta) >= 0.0) and np.all(prime >= 0.0)):
            return False
        if not (np.all(beta <= 0.0) and np.all(beta > -1.0)) or np.any(beta[s >= eps] != 0.0):
            return False
    return True


def penalty_derivative_defect(eps: float, s: np.ndarray) -> float:
    """
    Largest |beta' - centered difference| / |beta'| over s with |s - eps| >= 10 eps macheps^(1/3).

    The step follows the local scale of the exponent. Points whose exponent lies
    within 100 above the clamp are skipped; the differences there run into subnormals.
    """
    params = PenaltyParams(eps)
    s = np.asarray(s, dtype=float)
    s = s[np.abs(s - eps) >= 10.0 * eps * np.finfo(float).eps ** (1.0 / 3.0)]
    with np.errstate(divide="ignore"):
        exponent = np.where(s < eps, eps / (s - eps), 0.0)
    s = s[(exponent >= EXP_FLOOR + 100.0) | (exponent <= EXP_FLOOR - 1.0)]
    gap = np.abs(s - eps)

    step = 1e-4 * np.minimum(gap, gap ** 2 / eps)
    up, down = s + step, s - step
    centered = (penalty_beta(params, up) - penalty_beta(params, down)) / (up - down)
    _, prime = beta_and_prime(params, s)
    defect = np.abs(centered - prime)
    if np.any(defect[prime == 0.0] > 0.0):
        return float("inf")
    live = prime > 0.0
    return float(np.max(defect[live] / prime[live])) if live.any() else 0.0


def _penalty_derivative() -> bool:
    s = np.linspace(-1.0, 1.0, 100_001)
    return all(penalty_derivative_defect(eps, s) <= 1e-6 for eps in (1e-1, 1e-2, 1e-3))


def _penalty_self_similar() -> bool:
    sigma = np.linspace(-5.0, 3.0, 801)
    with np.errstate(divide="ignore"):
        expected = np.where(sigma < 1.0, -np.exp(1.0 / (sigma - 1.0)), 0.0)
    return all(
        np.allclose(penalty_beta(PenaltyParams(eps), eps * sigma), expected, rtol=1e-10, atol=1e-300)
        for eps in (1e-1, 1e-2, 1e-3)
    )


def _kernel_mass() -> bool:
    for t in (0.01, 0.1, 1.0):
        x = np.arange(-80, 81) * (np.sqrt(t) / 10.0)
        line = trapezoid(heat_kernel_r2(x ** 2, t, 1), x)
        plane = trapezoid(trapezoid(heat_kernel_r2(np.add.outer(x ** 2, x ** 2), t, 2), x), x)
        if abs(line - 1.0) > 1e-4 or abs(plane - 1.0) > 1e-4:
            return False
    return True


def heat_residual(points: np.ndarray, t: float, d: float = 1e-4) -> float:
    """max |Delta_d G - d_t G| / max |d_t G| over points (shape (m, n)) by centered differences."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[1]
    g = lambda p, tt: heat_kernel_r2(np.sum(p ** 2, axis=1), tt, n)
    g_t = (g(points, t + d) - g(points, t - d)) / (2.0 * d)
    lap = np.zeros(len(points))
    for axis in range(n):
        shift = np.zeros(n)
        shift[axis] = d
        lap += (g(points + shift, t) - 2.0 * g(points, t) + g(points - shift, t)) / d ** 2
    return float(np.max(np.abs(lap - g_t)) / np.max(np.abs(g_t)))


def _kernel_heat_equation() -> bool:
    x = np.linspace(-3.0, 3.0, 13)
    samples = (x[:, None], np.column_stack([x, -0.5 * x]))
    return all(heat_residual(p, t) <= 1e-3 for p in samples for t in (0.1, 0.5, 1.0))


def _laplacian_symmetry(seed: int) -> bool:
    rng = np.random.default_rng(seed)
    for grid in (make_grid(1, Geometry.BOX, 33, 3, (0.0, 1.0), T=0.1), make_grid(2, Geometry.BOX, 17, 3, (0.0, 1.0), T=0.1)):
        inside = ~grid.dirichlet_mask()
        a = np.where(inside, rng.normal(size=grid.space_shape), 0.0)
        b = np.where(inside, rng.normal(size=grid.space_shape), 0.0)
        left = float(np.sum(fd_laplacian(a, grid) * b))
        right = float(np.sum(a * fd_laplacian(b, grid)))
        if abs(left - right) > 1e-12 * max(abs(left), abs(right)):
            return False
    return True


def _comparison_principle(seed: int) -> bool:
    """Ordered previous level, lateral data and obstacle give ordered steps with beta frozen."""
    spec, grid = build_builtin("thick-active", n_space=33, n_time=9)
    u = march(spec, grid).u.values
    data = spec.data
    op = build_step_operator(grid, Prototype.THICK)
    rng = np.random.default_rng(seed)
    for k in range(1, grid.n_time):
        z_star, psi_u = op.gather(u[k]), op.gather(data.psi.values[k])
        lower = op.frozen_penalty_solve(op.rhs(u[k - 1], data.lateral.values[k], data.f.values[k]), z_star, psi_u, spec.eps)
        upper = op.frozen_penalty_solve(
            op.rhs(
                u[k - 1] + 0.01 * rng.random(grid.space_shape),
                data.lateral.values[k] + 0.01 * rng.random(grid.space_shape),
                data.f.values[k],
            ),
            z_star,
            psi_u,
            spec.eps,
            psi_shift=0.01 * rng.random(op.n_unknowns),
        )
        if np.any(lower > upper + 1e-10):
            return False
    return True


def _energy_dissipation() -> bool:
    spec, grid = build_builtin("unconstrained-heat", n_space=33, n_time=21)
    norms = np.linalg.norm(march(spec, grid).u.values, axis=1)
    return bool(np.all(np.diff(norms) <= 0.0))


def _psor_complementarity(seed: int) -> bool:
    rng = np.random.default_rng(seed)
    n = 50
    operator = sps.diags([-np.ones(n - 1), 2.5 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    problem = LcpStepProblem(operator, rng.normal(size=n), 0.5 * rng.normal(size=n), np.ones(n, dtype=bool))
    z = psor_solve(problem)
    return problem.defect(z) <= 1e-8 and np.all(z >= problem.obstacle - 1e-12) and problem.complementarity(z) <= 1e-8


def _blowup_homogeneity() -> bool:
    grid = builtin_grid("signorini-stationary", n_space=129, n_time=33)
    u = closed_form_field("signorini-stationary", grid)
    point = (0.125, 0.0, 0.0)
    small, large = hyperbolic_blowup(u, point, 0.05), hyperbolic_blowup(u, point, 0.1)
    gap = float(np.max(np.abs(small.values - large.values)))
    return gap <= (grid.h / 0.05) * large.max_abs()


def _density_bounds(seed: int) -> bool:
    result = _traveling_result(65, 33, 0.25)
    snapshots = extract_free_boundary(result)
    rng = np.random.default_rng(seed)
    grown = [dataclasses.replace(s, coincidence_mask=s.coincidence_mask | (rng.random(s.coincidence_mask.shape) < 0.2))
             for s in snapshots]
    h = result.grid.h
    radii = [2 * h, 4 * h, 8 * h]
    for snap in snapshots[::8]:
        if not snap.interface_points:
            continue
        point = (snap.t,) + tuple(snap.interface_points[0])
        base = parabolic_density(snapshots, point, radii).series
        more = parabolic_density(grown, point, radii).series
        if any(not 0.0 <= d <= 1.0 for _, d in base + more):
            return False
        if any(b[1] > m[1] for b, m in zip(base, more)):
            return False
    return True


def _eigen_constraint_order() -> bool:
    slit = estimate_halfspace_eigenvalue(R=5.0, n=64, constraint="slit")
    line = estimate_halfspace_eigenvalue(R=5.0, n=64, constraint="line")
    return slit <= line + 1e-6


def _phi_quadratic() -> bool:
    grid = make_grid(2, Geometry.HALF_BOX, 65, 3, ((-1.0, 1.0), (0.0, 1.0)), T=0.04)
    x1, x2 = grid.mesh()
    w = ScalarField.constant_in_time(grid, np.sqrt(np.maximum(0.5 * (np.hypot(x1, x2) + x1), 0.0)), "w")
    radii = [0.05, 0.1, 0.2]
    one = monotonicity_functional(w, (0.04, 0.0, 0.0), radii, 0.9).values
    two = monotonicity_functional(w.scaled(2.0), (0.04, 0.0, 0.0), radii, 0.9).values
    return all(abs(b - 4.0 * a) <= 1e-12 * max(abs(b), 1e-300) for a, b in zip(one, two))


def _affine_quasiconvexity() -> bool:
    spec, grid = build_builtin("unconstrained-heat", n_space=17, n_time=9, T=1.0)
    t, x = grid.space_time_mesh()
    affine = ScalarField(grid, 3.0 + 2.0 * t + x, "affine")
    return quasiconvexity_check(affine, spec.data).utt_min == 0.0


def _unconstrained_identity() -> bool:
    spec, grid = build_builtin("unconstrained-heat", n_space=33, n_time=21)
    return bool(np.array_equal(march(spec, grid).u.values, march_unconstrained(spec, grid).u.values))


def check_invariant_suites(ctx: AcceptanceContext) -> tuple[bool, str, dict]:
    suites: list[tuple[str, Callable[[], bool]]] = [
        ("penalty_monotone", _penalty_scan),
        ("penalty_derivative", _penalty_derivative),
        ("penalty_self_similar", _penalty_self_similar),
        ("kernel_mass", _kernel_mass),
        ("kernel_heat_equation", _kernel_heat_equation),
        ("laplacian_symmetry", lambda: _laplacian_symmetry(ctx.seed)),
        ("comparison_principle", lambda: _comparison_principle(ctx.seed)),
        ("energy_dissipation", _energy_dissipation),
        ("psor_complementarity", lambda: _psor_complementarity(ctx.seed)),
        ("blowup_homogeneity", _blowup_homogeneity),
        ("density_bounds", lambda: _density_bounds(ctx.seed)),
        ("eigen_constraint_order", _eigen_constraint_order),
        ("phi_quadratic", _phi_quadratic),
        ("affine_quasiconvexity", _affine_quasiconvexity),
        ("unconstrained_identity", _unconstrained_identity),
    ]
    outcome = {}
    for name, suite in suites:
        outcome[name] = bool(suite())
    failed = [name for name, ok in outcome.items() if not ok]
    detail = f"{len(outcome) - len(failed)}/{len(outcome)} green" + (f" (failed: {', '.join(failed)})" if failed else "")
    return not failed, detail, outcome


# Registry in reporting order
CRITERIA: list[tuple[str, CriterionCheck]] = [
    (PENALTY_CONVERGENCE, check_penalty_convergence),
    (QUASICONVEXITY, check_quasiconvexity),
    (HALFSPACE_EIGENVALUE, check_halfspace_eigenvalue),
    (MONOTONICITY_FORMULA, check_monotonicity_formula),
    (OPTIMAL_REGULARITY, check_optimal_regularity),
    (BLOWUP_PROFILE, check_blowup_profile),
    (FREE_BOUNDARY_GEOMETRY, check_free_boundary_geometry),
    (TIME_DERIVATIVE_CONTINUITY, check_time_derivative_continuity),
    (FRACTIONAL_CONSISTENCY, check_fractional_consistency),
    (INVARIANT_SUITES, check_invariant_suites),
]


def criterion_names() -> list[str]:
    return [name for name, _ in CRITERIA]


def select_criteria(only: Sequence[str] = ()) -> list[tuple[str, CriterionCheck]]:
    """Registry entries named in `only` (all when empty), in registry order."""
    if not only:
        return list(CRITERIA)
    known = criterion_names()
    unknown = [name for name in only if name not in known]
    if unknown:
        raise ConfigInvalid("only", f"unknown criterion '{unknown[0]}' (known: {', '.join(known)})")
    return [(name, check) for name, check in CRITERIA if name in only]


def _run_one(name: str, check: CriterionCheck, ctx: AcceptanceContext) -> CriterionResult:
    start = time.perf_counter()
    try:
        passed, detail, metrics = check(ctx)
    except Exception as exc:
        logger.error(f"Criterion {name} raised {type(exc).__name__}: {exc}")
        passed, detail, metrics = False, f"ERROR: {type(exc).__name__}: {exc}", {}
    seconds = time.perf_counter() - start
    logger.info(f"Criterion {name}: {'PASS' if passed else 'FAIL'} in {seconds:.1f}s")
    return CriterionResult(name=name, passed=bool(passed), detail=detail, metrics=metrics, seconds=seconds)


def evaluate_criteria(only: Sequence[str] = (), jobs: int = 1, seed: int = 0) -> list[CriterionResult]:
    """
    Run the selected criteria.

    Returns:
        One CriterionResult per criterion, in registry order regardless of jobs
    """
    selected = select_criteria(only)
    ctx = AcceptanceContext(jobs=max(1, int(jobs)), seed=int(seed))
    with ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
        futures = [pool.submit(_run_one, name, check, ctx) for name, check in selected]
        return [future.result() for future in futures]


def verify_report(results: Sequence[CriterionResult]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "passed": all(r.passed for r in results),
        "criteria": [r.to_dict() for r in results],
    }
