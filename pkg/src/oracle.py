"""
Reference solvers for validating the penalized schemes.

- LcpStepProblem / psor_solve: projected SOR for one backward-Euler obstacle step
- solve_reference: exact-constraint march (thick, signorini, fractional)
- signorini_profile, heat_series_solution: closed forms (re-exported from profiles)

Every step first tries the unconstrained linear solve; PSOR runs only when that
solve violates the obstacle. Signorini steps eliminate the off-contact unknowns
and relax on the dense contact-line Schur complement.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from src.discretization import StepOperator, build_step_operator
from src.errors import NotConverged, ProblemSpecInvalid, ShapeMismatch
from src.fields import ScalarField
from src.grid import Grid
from src.problems import Prototype, ProblemSpec
from src.profiles import heat_series_solution, signorini_profile  # noqa: F401  (re-exported)
from src.solvers import SolveResult, StepRecord, gap_time_derivative
from src.stencils import fractional_matrix

logger = logging.getLogger(__name__)

DEFAULT_OMEGA = 1.5
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 20000

Operator = Union[np.ndarray, sps.spmatrix]


@dataclass(frozen=True, eq=False)
class LcpStepProblem:
    """
    Find z >= obstacle on constrained nodes with r = operator z - rhs >= 0 there,
    r = 0 elsewhere, and (z - obstacle) r = 0.
    """
    operator: Operator
    rhs: np.ndarray
    obstacle: np.ndarray
    constrained_mask: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.rhs).size
        if self.operator.shape != (n, n):
            raise ShapeMismatch(f"operator shape {self.operator.shape} does not match rhs size {n}")
        for name in ("obstacle", "constrained_mask"):
            if np.asarray(getattr(self, name)).shape != (n,):
                raise ShapeMismatch(f"{name} must have shape ({n},)")
        if np.any(self.diagonal() <= 0):
            raise ProblemSpecInvalid("operator diagonal entries must be positive")

    @property
    def size(self) -> int:
        return int(np.asarray(self.rhs).size)

    @property
    def dense(self) -> bool:
        return not sps.issparse(self.operator)

    def diagonal(self) -> np.ndarray:
        if self.dense:
            return np.diag(np.asarray(self.operator, dtype=float)).copy()
        return self.operator.diagonal()

    def apply(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(self.operator @ z, dtype=float).ravel()

    def defect(self, z: np.ndarray) -> float:
        """max of |min(z - obstacle, r)| on constrained nodes and |r| on free nodes."""
        r = self.apply(z) - self.rhs
        mask = np.asarray(self.constrained_mask, dtype=bool)
        parts = [0.0]
        if mask.any():
            parts.append(float(np.max(np.abs(np.minimum(z[mask] - self.obstacle[mask], r[mask])))))
        if (~mask).any():
            parts.append(float(np.max(np.abs(r[~mask]))))
        return max(parts)

    def complementarity(self, z: np.ndarray) -> float:
        r = self.apply(z) - self.rhs
        mask = np.asarray(self.constrained_mask, dtype=bool)
        if not mask.any():
            return 0.0
        return float(np.max(np.abs((z[mask] - self.obstacle[mask]) * r[mask])))


@dataclass(frozen=True, eq=False)
class PsorOutcome:
    z: np.ndarray
    sweeps: int
    defect: float


def _sparse_rows(matrix) -> list[tuple[list[int], list[float]]]:
    csr = sps.csr_matrix(matrix)
    rows = []
    for i in range(csr.shape[0]):
        lo, hi = csr.indptr[i], csr.indptr[i + 1]
        cols = csr.indices[lo:hi]
        vals = csr.data[lo:hi]
        off = cols != i
        rows.append((cols[off].tolist(), vals[off].tolist()))
    return rows


def psor_run(
    problem: LcpStepProblem,
    omega: float = DEFAULT_OMEGA,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    order: str = "forward",
    initial: Optional[np.ndarray] = None,
) -> PsorOutcome:
    """psor_solve with sweep count and final defect."""
    if not 0.0 < omega < 2.0:
        raise ValueError(f"relaxation must lie in (0, 2), got {omega}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if order not in ("forward", "reverse"):
        raise ValueError(f"order must be 'forward' or 'reverse', got '{order}'")

    n = problem.size
    q = np.asarray(problem.rhs, dtype=float)
    obstacle = np.asarray(problem.obstacle, dtype=float)
    mask = np.asarray(problem.constrained_mask, dtype=bool)
    diag = problem.diagonal()
    z0 = np.zeros(n) if initial is None else np.array(initial, dtype=float)
    z0 = np.where(mask, np.maximum(z0, obstacle), z0)
    sequence = range(n) if order == "forward" else range(n - 1, -1, -1)

    defect = problem.defect(z0)
    if defect <= tol:
        return PsorOutcome(z=z0, sweeps=0, defect=defect)

    if problem.dense:
        M = np.asarray(problem.operator, dtype=float)
        z = z0
        for sweep in range(1, max_iters + 1):
            for i in sequence:
                sigma = M[i] @ z - diag[i] * z[i]
                zi = z[i] + omega * ((q[i] - sigma) / diag[i] - z[i])
                z[i] = max(zi, obstacle[i]) if mask[i] else zi
            defect = problem.defect(z)
            logger.debug(f"PSOR sweep {sweep}: defect={defect:.3e}")
            if defect <= tol:
                return PsorOutcome(z=z, sweeps=sweep, defect=defect)
    else:
        rows = _sparse_rows(problem.operator)
        zl = z0.tolist()
        ql, dl, ol, ml = q.tolist(), diag.tolist(), obstacle.tolist(), mask.tolist()
        for sweep in range(1, max_iters + 1):
            for i in sequence:
                cols, vals = rows[i]
                sigma = 0.0
                for c, a in zip(cols, vals):
                    sigma += a * zl[c]
                zi = zl[i] + omega * ((ql[i] - sigma) / dl[i] - zl[i])
                zl[i] = max(zi, ol[i]) if ml[i] else zi
            z = np.array(zl)
            defect = problem.defect(z)
            logger.debug(f"PSOR sweep {sweep}: defect={defect:.3e}")
            if defect <= tol:
                return PsorOutcome(z=z, sweeps=sweep, defect=defect)

    raise NotConverged(max_iters, defect)


def psor_solve(
    problem: LcpStepProblem,
    omega: float = DEFAULT_OMEGA,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    order: str = "forward",
    initial: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Projected successive over-relaxation.

    Stops when the complementarity defect (see LcpStepProblem.defect) is <= tol.

    Raises:
        NotConverged: defect still above tol after max_iters sweeps
    """
    return psor_run(problem, omega, tol, max_iters, order, initial).z


# --- reference marches -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class _ContactSchur:
    """Elimination of off-contact unknowns: z_G solves an LCP with S, q = b_G - A_GF A_FF^-1 b_F."""
    free: np.ndarray
    contact: np.ndarray
    lu_free: spla.SuperLU
    A_FG: sps.csr_matrix
    A_GF: sps.csr_matrix
    S: np.ndarray

    @classmethod
    def build(cls, op: StepOperator) -> "_ContactSchur":
        contact = op.constrained
        free = ~contact
        A = op.A.tocsr()
        A_FF = A[free][:, free].tocsc()
        A_FG = A[free][:, contact]
        A_GF = A[contact][:, free]
        A_GG = A[contact][:, contact].toarray()
        lu_free = spla.splu(A_FF)
        X = lu_free.solve(A_FG.toarray())
        S = A_GG - A_GF @ X
        return cls(free=free, contact=contact, lu_free=lu_free, A_FG=A_FG.tocsr(), A_GF=A_GF.tocsr(), S=0.5 * (S + S.T))

    def reduced_rhs(self, b: np.ndarray) -> np.ndarray:
        return b[self.contact] - self.A_GF @ self.lu_free.solve(b[self.free])

    def back_substitute(self, z_contact: np.ndarray, b: np.ndarray) -> np.ndarray:
        z = np.empty(b.size)
        z[self.contact] = z_contact
        z[self.free] = self.lu_free.solve(b[self.free] - self.A_FG @ z_contact)
        return z


def _reference_record(level: int, t: float, sweeps: int, problem: LcpStepProblem, z: np.ndarray) -> StepRecord:
    mask = np.asarray(problem.constrained_mask, dtype=bool)
    gap = z[mask] - problem.obstacle[mask]
    return StepRecord(
        level=level,
        t=t,
        newton_iters=sweeps,
        residual=problem.defect(z),
        complementarity_defect=problem.complementarity(z),
        min_gap=float(np.min(gap)) if gap.size else float("inf"),
    )


def _local_reference(spec: ProblemSpec, grid: Grid, u: np.ndarray, records: list, **psor):
    op = build_step_operator(grid, spec.prototype, spec.alpha)
    data = spec.data
    mask = op.constrained
    schur = _ContactSchur.build(op) if spec.prototype == Prototype.SIGNORINI else None

    for k in range(1, grid.n_time):
        lateral = data.lateral.values[k]
        b = op.rhs(u[k - 1], lateral, data.f.values[k])
        obstacle = op.gather(data.psi.values[k])
        full = LcpStepProblem(op.A, b, obstacle, mask)

        z = op.linear_solve(b)
        sweeps = 0
        if np.any(z[mask] < obstacle[mask]):
            warm = np.maximum(op.gather(u[k - 1]), obstacle)
            try:
                if schur is None:
                    outcome = psor_run(full, initial=warm, **psor)
                    z = outcome.z
                else:
                    reduced = LcpStepProblem(schur.S, schur.reduced_rhs(b), obstacle[mask], np.ones(int(mask.sum()), dtype=bool))
                    outcome = psor_run(reduced, initial=warm[mask], **psor)
                    z = schur.back_substitute(outcome.z, b)
            except NotConverged as exc:
                exc.time_level = k
                raise
            sweeps = outcome.sweeps
        u[k] = op.scatter(z, lateral)
        records.append(_reference_record(k, float(grid.times[k]), sweeps, full, z))


def _fractional_reference(spec: ProblemSpec, grid: Grid, u: np.ndarray, records: list, **psor):
    M = np.eye(grid.n_space) + grid.dt * fractional_matrix(grid, spec.s)
    M = 0.5 * (M + M.T)
    everywhere = np.ones(grid.n_space, dtype=bool)
    data = spec.data
    for k in range(1, grid.n_time):
        b = u[k - 1] - grid.dt * data.f.values[k]
        obstacle = data.psi.values[k]
        problem = LcpStepProblem(M, b, obstacle, everywhere)
        z = np.linalg.solve(M, b)
        sweeps = 0
        if np.any(z < obstacle):
            try:
                outcome = psor_run(problem, initial=np.maximum(u[k - 1], obstacle), **psor)
            except NotConverged as exc:
                exc.time_level = k
                raise
            z, sweeps = outcome.z, outcome.sweeps
        u[k] = z
        records.append(_reference_record(k, float(grid.times[k]), sweeps, problem, z))


def solve_reference(
    spec: ProblemSpec,
    grid: Optional[Grid] = None,
    omega: float = DEFAULT_OMEGA,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SolveResult:
    """
    Backward-Euler obstacle problem with the constraint imposed exactly.

    Raises:
        ProblemSpecInvalid: dynamic_thin has no reference solver
        NotConverged: with time_level of the failing step
    """
    grid = grid or spec.grid
    if grid != spec.grid:
        raise ShapeMismatch("grid differs from the grid the problem data were sampled on")
    if spec.prototype == Prototype.DYNAMIC_THIN:
        raise ProblemSpecInvalid("no reference solver for the dynamic_thin prototype")

    u = np.empty(grid.shape)
    u[0] = spec.data.phi0
    records: list[StepRecord] = []
    psor = {"omega": omega, "tol": tol, "max_iters": max_iters}
    if spec.prototype == Prototype.FRACTIONAL:
        _fractional_reference(spec, grid, u, records, **psor)
    else:
        _local_reference(spec, grid, u, records, **psor)

    psi = spec.data.psi
    result = SolveResult(
        u=ScalarField(grid, u, "u_ref"),
        v=ScalarField(grid, gap_time_derivative(u, psi.values, grid.dt), "v_ref"),
        psi=psi,
        per_step=records,
        eps_used=0.0,
        prototype=spec.prototype,
        name=f"{spec.name}:reference",
    )
    logger.info(
        f"Reference '{spec.name}' ({spec.prototype.value}): {grid.n_time - 1} steps, "
        f"sweeps={sum(r.newton_iters for r in records)}, max_defect={max((r.residual for r in records), default=0.0):.3e}"
    )
    return result
