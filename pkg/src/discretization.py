"""
Backward-Euler step operators on the node graph.

One time step of every local prototype is the nonlinear system

    A z - b + w * beta_eps(z - psi) = 0

on the non-Dirichlet ("unknown") nodes, where
- A = diag(mass) + dt * K_UU, K the symmetric graph Laplacian (edge weight 1/h^2,
  edges along the contact line weighted 1/2)
- b = mass * u_prev - dt * K_UD u_D - dt * source_weight * f
- w = dt on every node (thick) or dt / h on contact-line nodes (thin)

Contact-line rows are the half-weighted ghost-node closure, which keeps A symmetric.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from src.errors import GeometryMismatch, NewtonDiverged
from src.grid import Geometry, Grid
from src.penalty import PenaltyParams, beta_and_prime
from src.problems import REQUIRED_GEOMETRY, Prototype

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
NEWTON_MAX_ITERS = 50
DAMPING_FLOOR = 2.0 ** -10


def graph_laplacian(grid: Grid) -> sps.csr_matrix:
    """
    Symmetric positive semidefinite K over all spatial nodes (row-major order).

    -K equals the centered Laplacian on interior nodes and half the ghost-closed
    Laplacian (without the flux term) on contact-line nodes.
    """
    idx = np.arange(int(np.prod(grid.space_shape))).reshape(grid.space_shape)
    inv_h2 = 1.0 / grid.h ** 2
    heads, tails, weights = [], [], []

    def add(a, b, w):
        heads.append(a.ravel())
        tails.append(b.ravel())
        weights.append(np.broadcast_to(w, a.shape).ravel())

    if grid.dim == 1:
        add(idx[:-1], idx[1:], inv_h2)
        if grid.periodic:
            add(idx[-1:], idx[:1], inv_h2)
    else:
        w0 = np.full((grid.space_shape[0] - 1, grid.space_shape[1]), inv_h2)
        if grid.geometry == Geometry.HALF_BOX:
            w0[:, 0] *= 0.5
        add(idx[:-1, :], idx[1:, :], w0)
        add(idx[:, :-1], idx[:, 1:], inv_h2)

    a = np.concatenate(heads)
    b = np.concatenate(tails)
    w = np.concatenate(weights)
    n = idx.size
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([b, a, a, b])
    data = np.concatenate([-w, -w, w, w])
    return sps.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


@dataclass(frozen=True, eq=False)
class NewtonOutcome:
    z: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class StepOperator:
    """Assembled step matrices for one (grid, prototype, alpha)."""
    grid: Grid
    prototype: Prototype
    alpha: Optional[float]
    unknown: np.ndarray          # bool over space, row-major
    constrained: np.ndarray      # bool over unknowns
    mass: np.ndarray
    source_weight: np.ndarray
    penalty_weight: np.ndarray
    A: sps.csc_matrix
    K_UD: sps.csr_matrix
    lu: spla.SuperLU

    @property
    def n_unknowns(self) -> int:
        return int(self.mass.size)

    def gather(self, slice_values: np.ndarray) -> np.ndarray:
        return np.asarray(slice_values, dtype=float).ravel()[self.unknown.ravel()]

    def scatter(self, z: np.ndarray, boundary_slice: np.ndarray) -> np.ndarray:
        """Full slice: z on unknown nodes, boundary values elsewhere."""
        out = np.array(boundary_slice, dtype=float).ravel()
        out[self.unknown.ravel()] = z
        return out.reshape(self.grid.space_shape)

    def rhs(self, u_prev: np.ndarray, lateral_next: np.ndarray, f_next: np.ndarray) -> np.ndarray:
        dirichlet = np.asarray(lateral_next, dtype=float).ravel()[~self.unknown.ravel()]
        dt = self.grid.dt
        return (
            self.mass * self.gather(u_prev)
            - dt * (self.K_UD @ dirichlet)
            - dt * self.source_weight * self.gather(f_next)
        )

    def linear_solve(self, b: np.ndarray) -> np.ndarray:
        return self.lu.solve(b)

    def frozen_penalty_solve(
        self,
        b: np.ndarray,
        z_star: np.ndarray,
        psi_u: np.ndarray,
        eps: PenaltyParams,
        psi_shift: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """
        Linear step with beta frozen at z_star:

            (A + diag(w beta')) z = b - w beta + w beta' (z_star + psi_shift)

        beta, beta' taken at z_star - psi_u. psi_shift linearizes about the
        obstacle psi_u + psi_shift. The matrix is an M-matrix, so the solution
        is monotone in b and psi_shift.
        """
        pw = self.penalty_weight
        beta, prime = beta_and_prime(eps, z_star - psi_u)
        jac_diag = pw * prime
        target = b - pw * beta + jac_diag * z_star
        if psi_shift is not None:
            target = target + jac_diag * psi_shift
        if np.any(jac_diag):
            J = (self.A + sps.diags(jac_diag, format="csc")).tocsc()
            return spla.spsolve(J, target)
        return self.lu.solve(target)

    def residual(self, z: np.ndarray, b: np.ndarray, psi_u: np.ndarray, eps: PenaltyParams) -> np.ndarray:
        beta, _ = beta_and_prime(eps, z - psi_u)
        return self.A @ z - b + self.penalty_weight * beta

    def newton(
        self,
        b: np.ndarray,
        z0: np.ndarray,
        psi_u: np.ndarray,
        eps: PenaltyParams,
        tol: float = NEWTON_TOL,
        max_iters: int = NEWTON_MAX_ITERS,
    ) -> NewtonOutcome:
        """
        Damped Newton for A z - b + w beta(z - psi) = 0.

        The update solves J z_new = b - w beta + w beta' z with J = A + diag(w beta'),
        so an inactive penalty reproduces the linear solve exactly. At least one
        update is always taken.

        Raises:
            NewtonDiverged: iteration cap or damping floor reached
        """
        z = np.array(z0, dtype=float)
        res = self.residual(z, b, psi_u, eps)
        res_norm = float(np.max(np.abs(res))) if res.size else 0.0

        for it in range(1, max_iters + 1):
            z_full = self.frozen_penalty_solve(b, z, psi_u, eps)

            lam = 1.0
            while True:
                cand = z_full if lam == 1.0 else z + lam * (z_full - z)
                cand_res = self.residual(cand, b, psi_u, eps)
                cand_norm = float(np.max(np.abs(cand_res))) if cand_res.size else 0.0
                if cand_norm < res_norm or cand_norm <= tol * (1.0 + float(np.max(np.abs(cand)))):
                    break
                lam *= 0.5
                if lam < DAMPING_FLOOR:
                    raise NewtonDiverged("damping floor reached", residual=res_norm, iterations=it)
            if lam < 1.0:
                logger.warning(f"Newton iteration {it}: step damped to {lam:.4g}")

            z, res_norm = cand, cand_norm
            logger.debug(f"Newton iteration {it}: residual={res_norm:.3e}")
            if res_norm <= tol * (1.0 + float(np.max(np.abs(z)))):
                return NewtonOutcome(z=z, iterations=it, residual=res_norm)

        raise NewtonDiverged("iteration cap reached", residual=res_norm, iterations=max_iters)


def _unknown_mask(grid: Grid) -> np.ndarray:
    return ~grid.dirichlet_mask()


@lru_cache(maxsize=32)
def build_step_operator(grid: Grid, prototype: Prototype, alpha: Optional[float] = None) -> StepOperator:
    """
    Assemble and factor the step matrices of a local prototype.

    Raises:
        GeometryMismatch: grid geometry does not suit the prototype
    """
    prototype = Prototype(prototype)
    if prototype == Prototype.FRACTIONAL:
        raise GeometryMismatch("the fractional prototype has no sparse step operator")
    required = REQUIRED_GEOMETRY[prototype]
    if grid.geometry != required:
        raise GeometryMismatch(f"{prototype.value} needs a {required.value} grid, got {grid.geometry.value}")

    unknown = _unknown_mask(grid)
    flat = unknown.ravel()
    gamma = grid.gamma_mask().ravel()[flat]

    mass = np.ones(int(flat.sum()))
    source_weight = np.ones_like(mass)
    penalty_weight = np.zeros_like(mass)
    if prototype == Prototype.THICK:
        penalty_weight[:] = grid.dt
        constrained = np.ones_like(mass, dtype=bool)
    else:
        mass[gamma] = 0.5
        source_weight[gamma] = 0.5
        if prototype == Prototype.DYNAMIC_THIN:
            mass[gamma] += alpha / grid.h
        penalty_weight[gamma] = grid.dt / grid.h
        constrained = gamma.copy()

    K = graph_laplacian(grid)
    K_UU = K[flat][:, flat]
    K_UD = K[flat][:, ~flat]
    A = (sps.diags(mass) + grid.dt * K_UU).tocsc()
    lu = spla.splu(A)
    logger.debug(f"Step operator built: {prototype.value} unknowns={mass.size} dt={grid.dt:.4g}")
    return StepOperator(
        grid=grid,
        prototype=prototype,
        alpha=alpha,
        unknown=unknown,
        constrained=constrained,
        mass=mass,
        source_weight=source_weight,
        penalty_weight=penalty_weight,
        A=A,
        K_UD=K_UD.tocsr(),
        lu=lu,
    )
