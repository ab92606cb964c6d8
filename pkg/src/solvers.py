"""
Penalized time-marching solvers.

Steppers:
- step_thick: obstacle penalty on every unknown node
- step_signorini: penalty in the contact-line flux
- step_dynamic: contact-line flux with alpha * u_t coupling
- step_fractional: spectral (-Delta)^s with Picard iteration on the penalty, dense Newton when it stalls

march runs the prototype's stepper over all time levels and differences u - psi in time.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from src.discretization import DAMPING_FLOOR, NEWTON_MAX_ITERS, NEWTON_TOL, build_step_operator
from src.errors import GeometryMismatch, NewtonDiverged, PicardStalled, ProblemSpecInvalid, ShapeMismatch, SolverError
from src.fields import ScalarField
from src.grid import Grid
from src.penalty import beta_and_prime
from src.problems import Prototype, ProblemSpec, contact_mask
from src.stencils import fractional_laplacian, fractional_matrix, fractional_multiplier

logger = logging.getLogger(__name__)

PICARD_TOL = 1e-10
PICARD_MAX_ITERS = 200


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of one accepted time step."""
    level: int
    t: float
    newton_iters: int
    residual: float
    complementarity_defect: float
    min_gap: float

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "t": self.t,
            "newton_iters": self.newton_iters,
            "residual": self.residual,
            "complementarity_defect": self.complementarity_defect,
            "min_gap": self.min_gap,
        }


def gap_time_derivative(u: np.ndarray, psi: np.ndarray, dt: float) -> np.ndarray:
    """(u - psi)_t by centered differences, one-sided at the first and last level."""
    return np.gradient(np.asarray(u) - np.asarray(psi), dt, axis=0, edge_order=1)


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solution field, its gap time derivative and per-step diagnostics."""
    u: ScalarField
    v: ScalarField
    psi: ScalarField
    per_step: list = field(default_factory=list)
    eps_used: float = 0.0
    prototype: Prototype = Prototype.THICK
    name: str = ""

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def from_fields(cls, u: ScalarField, psi: ScalarField, prototype: Prototype, name: str = "") -> "SolveResult":
        """Wrap an exact (e.g. closed-form) field; eps_used = 0 marks it unpenalized."""
        grid = u.grid
        v = gap_time_derivative(u.values, psi.values, grid.dt)
        return cls(
            u=u,
            v=ScalarField(grid, v, "v"),
            psi=psi,
            per_step=[],
            eps_used=0.0,
            prototype=Prototype(prototype),
            name=name,
        )

    def max_residual(self) -> float:
        return max((r.residual for r in self.per_step), default=0.0)

    def max_complementarity_defect(self) -> float:
        return max((r.complementarity_defect for r in self.per_step), default=0.0)

    def min_gap(self) -> float:
        """min(u - psi) over the contact set, all levels including the initial one."""
        mask = contact_mask(self.grid, self.prototype) & ~self.grid.dirichlet_mask()
        gap = self.u.values - self.psi.values
        return float(np.min(gap[:, mask]))

    def to_dict(self) -> dict:
        return {
            "schema_version": "solve_result.v1",
            "name": self.name,
            "prototype": self.prototype.value,
            "eps_used": self.eps_used,
            "grid": self.grid.to_dict(),
            "summary": {
                "levels": self.grid.n_time,
                "newton_iters_total": int(sum(r.newton_iters for r in self.per_step)),
                "max_residual": self.max_residual(),
                "max_complementarity_defect": self.max_complementarity_defect(),
                "min_gap": self.min_gap(),
                "u_max_abs": self.u.max_abs(),
            },
            "per_step": [r.to_dict() for r in self.per_step],
        }


# --- steppers --------------------------------------------------------------

def _check_grid(spec: ProblemSpec, grid: Grid):
    if grid != spec.grid:
        raise ShapeMismatch("grid differs from the grid the problem data were sampled on")


def _record(spec: ProblemSpec, grid: Grid, level: int, u_next: np.ndarray, iters: int, residual: float) -> StepRecord:
    mask = contact_mask(grid, spec.prototype) & ~grid.dirichlet_mask()
    gap = (u_next - spec.data.psi.values[level])[mask]
    beta, _ = beta_and_prime(spec.eps, gap)
    return StepRecord(
        level=level,
        t=float(grid.times[level]),
        newton_iters=iters,
        residual=float(residual),
        complementarity_defect=float(np.max(np.abs(gap * beta))) if gap.size else 0.0,
        min_gap=float(np.min(gap)) if gap.size else float("inf"),
    )


def _local_step(u_prev, spec: ProblemSpec, grid: Grid, t_next: float, prototype: Prototype):
    _check_grid(spec, grid)
    alpha = None
    if prototype == Prototype.DYNAMIC_THIN:
        if spec.alpha is None:
            raise ProblemSpecInvalid("the dynamic step needs alpha")
        alpha = spec.alpha
    op = build_step_operator(grid, prototype, alpha)
    level = grid.level_of(t_next)
    data = spec.data
    lateral = data.lateral.values[level]
    u_prev = np.asarray(u_prev, dtype=float)

    b = op.rhs(u_prev, lateral, data.f.values[level])
    outcome = op.newton(b, op.gather(u_prev), op.gather(data.psi.values[level]), spec.eps)
    u_next = op.scatter(outcome.z, lateral)
    return u_next, _record(spec, grid, level, u_next, outcome.iterations, outcome.residual)


def _fractional_residual(u, u_prev, spec: ProblemSpec, grid: Grid, psi, f) -> np.ndarray:
    beta, _ = beta_and_prime(spec.eps, u - psi)
    return u - u_prev + grid.dt * (fractional_laplacian(u, grid, spec.s) + beta + f)


def _fractional_newton(u_prev, spec: ProblemSpec, grid: Grid, psi, f) -> tuple[np.ndarray, int, float]:
    """
    Damped Newton on the dense system (I + dt L + dt diag(beta')) u = u_prev - dt (beta - beta' u + f).

    Used when the Picard map stops contracting (dt max beta' >= 1 at small eps).

    Raises:
        NewtonDiverged: iteration cap or damping floor reached
    """
    dt = grid.dt
    base = np.eye(grid.n_space) + dt * fractional_matrix(grid, spec.s)
    u = np.array(u_prev, dtype=float)
    res_norm = float(np.max(np.abs(_fractional_residual(u, u_prev, spec, grid, psi, f))))

    for it in range(1, NEWTON_MAX_ITERS + 1):
        beta, prime = beta_and_prime(spec.eps, u - psi)
        u_full = np.linalg.solve(base + np.diag(dt * prime), u_prev - dt * (beta - prime * u + f))

        lam = 1.0
        while True:
            cand = u_full if lam == 1.0 else u + lam * (u_full - u)
            cand_norm = float(np.max(np.abs(_fractional_residual(cand, u_prev, spec, grid, psi, f))))
            if cand_norm < res_norm or cand_norm <= NEWTON_TOL * (1.0 + float(np.max(np.abs(cand)))):
                break
            lam *= 0.5
            if lam < DAMPING_FLOOR:
                raise NewtonDiverged("damping floor reached in the fractional step", residual=res_norm, iterations=it)
        if lam < 1.0:
            logger.warning(f"Fractional Newton iteration {it}: step damped to {lam:.4g}")

        u, res_norm = cand, cand_norm
        if res_norm <= NEWTON_TOL * (1.0 + float(np.max(np.abs(u)))):
            return u, it, res_norm

    raise NewtonDiverged("iteration cap reached in the fractional step", residual=res_norm, iterations=NEWTON_MAX_ITERS)


def _fractional_step(u_prev, spec: ProblemSpec, grid: Grid, t_next: float):
    _check_grid(spec, grid)
    if not grid.periodic:
        raise GeometryMismatch(f"the fractional step needs a periodic line, got {grid.geometry.value}")
    if spec.s is None:
        raise ProblemSpecInvalid("the fractional step needs s")
    level = grid.level_of(t_next)
    dt = grid.dt
    psi = spec.data.psi.values[level]
    f = spec.data.f.values[level]
    u_prev = np.asarray(u_prev, dtype=float)
    denom = 1.0 + dt * fractional_multiplier(grid, spec.s)

    u = u_prev.copy()
    for it in range(1, PICARD_MAX_ITERS + 1):
        beta, _ = beta_and_prime(spec.eps, u - psi)
        u_new = np.real(np.fft.ifft(np.fft.fft(u_prev - dt * (beta + f)) / denom))
        change = float(np.max(np.abs(u_new - u)))
        u = u_new
        if change <= PICARD_TOL * (1.0 + float(np.max(np.abs(u)))):
            break
    else:
        logger.info(f"Picard stalled at level {level} (change={change:.3e}); switching to Newton")
        try:
            u, newton_iters, _ = _fractional_newton(u_prev, spec, grid, psi, f)
        except NewtonDiverged as exc:
            raise PicardStalled(
                f"penalty fixed point not reached; Newton fallback failed: {exc}",
                residual=change,
                iterations=PICARD_MAX_ITERS,
            ) from exc
        it = PICARD_MAX_ITERS + newton_iters

    residual = _fractional_residual(u, u_prev, spec, grid, psi, f)
    return u, _record(spec, grid, level, u, it, float(np.max(np.abs(residual))))


def step_thick(u_prev, spec: ProblemSpec, grid: Grid, t_next: float) -> np.ndarray:
    """One backward-Euler step of u_t - Delta u = -beta_eps(u - psi) - f on a box."""
    return _local_step(u_prev, spec, grid, t_next, Prototype.THICK)[0]


def step_signorini(u_prev, spec: ProblemSpec, grid: Grid, t_next: float) -> np.ndarray:
    """One step with contact-line condition du/dx2 = beta_eps(u - psi)."""
    return _local_step(u_prev, spec, grid, t_next, Prototype.SIGNORINI)[0]


def step_dynamic(u_prev, spec: ProblemSpec, grid: Grid, t_next: float) -> np.ndarray:
    """One step with du/dx2 - alpha u_t = beta_eps(u - psi) on the contact line."""
    return _local_step(u_prev, spec, grid, t_next, Prototype.DYNAMIC_THIN)[0]


def step_fractional(u_prev, spec: ProblemSpec, grid: Grid, t_next: float) -> np.ndarray:
    """One IMEX step of u_t + (-Delta)^s u = -beta_eps(u - psi) - f on the periodic line."""
    return _fractional_step(u_prev, spec, grid, t_next)[0]


_ADVANCE: dict[Prototype, Callable] = {
    Prototype.THICK: lambda u, spec, grid, t: _local_step(u, spec, grid, t, Prototype.THICK),
    Prototype.SIGNORINI: lambda u, spec, grid, t: _local_step(u, spec, grid, t, Prototype.SIGNORINI),
    Prototype.DYNAMIC_THIN: lambda u, spec, grid, t: _local_step(u, spec, grid, t, Prototype.DYNAMIC_THIN),
    Prototype.FRACTIONAL: _fractional_step,
}


def march(spec: ProblemSpec, grid: Optional[Grid] = None, step_logger=None) -> SolveResult:
    """
    Run the prototype's stepper over every time level.

    Raises:
        SolverError: from the stepper, with time_level set to the failing level
    """
    grid = grid or spec.grid
    _check_grid(spec, grid)
    advance = _ADVANCE[spec.prototype]

    u = np.empty(grid.shape)
    u[0] = spec.data.phi0
    records = []
    for k in range(1, grid.n_time):
        try:
            u[k], record = advance(u[k - 1], spec, grid, float(grid.times[k]))
        except SolverError as exc:
            exc.time_level = k
            logger.error(f"March '{spec.name}' failed: {exc}")
            raise
        records.append(record)
        if step_logger is not None:
            step_logger.log(record)

    result = _assemble(spec, grid, u, records, spec.eps.eps)
    logger.info(
        f"March '{spec.name}' ({spec.prototype.value}) eps={spec.eps.eps:g}: "
        f"{grid.n_time - 1} steps, newton={sum(r.newton_iters for r in records)}, "
        f"min_gap={result.min_gap():.3e}, max_defect={result.max_complementarity_defect():.3e}"
    )
    return result


def march_unconstrained(spec: ProblemSpec, grid: Optional[Grid] = None) -> SolveResult:
    """Same scheme with the penalty removed (plain linear backward Euler)."""
    grid = grid or spec.grid
    _check_grid(spec, grid)
    data = spec.data
    u = np.empty(grid.shape)
    u[0] = data.phi0
    records = []

    if spec.prototype == Prototype.FRACTIONAL:
        denom = 1.0 + grid.dt * fractional_multiplier(grid, spec.s)
        for k in range(1, grid.n_time):
            u[k] = np.real(np.fft.ifft(np.fft.fft(u[k - 1] - grid.dt * data.f.values[k]) / denom))
            records.append(_record(spec, grid, k, u[k], 1, 0.0))
    else:
        op = build_step_operator(grid, spec.prototype, spec.alpha)
        for k in range(1, grid.n_time):
            lateral = data.lateral.values[k]
            b = op.rhs(u[k - 1], lateral, data.f.values[k])
            z = op.linear_solve(b)
            residual = float(np.max(np.abs(op.A @ z - b))) if z.size else 0.0
            u[k] = op.scatter(z, lateral)
            records.append(_record(spec, grid, k, u[k], 1, residual))

    return _assemble(spec, grid, u, records, 0.0)


def _assemble(spec: ProblemSpec, grid: Grid, u: np.ndarray, records: list, eps_used: float) -> SolveResult:
    psi = spec.data.psi
    return SolveResult(
        u=ScalarField(grid, u, "u"),
        v=ScalarField(grid, gap_time_derivative(u, psi.values, grid.dt), "v"),
        psi=psi,
        per_step=records,
        eps_used=eps_used,
        prototype=spec.prototype,
        name=spec.name,
    )
