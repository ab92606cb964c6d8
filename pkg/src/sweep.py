"""
Penalty-parameter sweep (sweep_table.v1).

Runs march once per eps and compares every run to one reference:
- the exact-constraint oracle for thick, signorini and fractional specs
- the smallest-eps penalized run for dynamic_thin (no oracle exists)
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src.errors import ConfigInvalid
from src.grid import Grid
from src.oracle import solve_reference
from src.problems import Prototype, ProblemSpec
from src.regularity import time_derivative_modulus
from src.solvers import SolveResult, march

logger = logging.getLogger(__name__)

MIN_SWEEP_ENTRIES = 3


@dataclass(frozen=True)
class SweepRow:
    eps: float
    error: float
    min_gap: float
    complementarity_defect: float
    max_residual: float
    newton_iters: int
    holder_exponent: Optional[float] = None
    modulus_table: tuple = ()

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "error": self.error,
            "min_gap": self.min_gap,
            "complementarity_defect": self.complementarity_defect,
            "max_residual": self.max_residual,
            "newton_iters": self.newton_iters,
            "holder_exponent": self.holder_exponent,
            "modulus_table": [list(pair) for pair in self.modulus_table],
        }


@dataclass(frozen=True, eq=False)
class SweepTable:
    name: str
    prototype: Prototype
    reference: str
    rows: list = field(default_factory=list)

    def column(self, key: str) -> list:
        return [getattr(row, key) for row in self.rows]

    def errors_strictly_decreasing(self) -> bool:
        errors = self.column("error")
        return all(b < a for a, b in zip(errors, errors[1:]))

    def to_dict(self) -> dict:
        return {
            "schema_version": "sweep_table.v1",
            "name": self.name,
            "prototype": self.prototype.value,
            "reference": self.reference,
            "rows": [row.to_dict() for row in self.rows],
        }

    def csv_rows(self) -> list[list]:
        header = ["eps", "error", "min_gap", "complementarity_defect", "max_residual", "newton_iters", "holder_exponent"]
        return [header] + [[getattr(row, key) for key in header] for row in self.rows]


def validate_eps_list(eps_list: Sequence[float]) -> list[float]:
    values = [float(e) for e in eps_list]
    if len(values) < MIN_SWEEP_ENTRIES:
        raise ConfigInvalid("eps_list", f"needs at least {MIN_SWEEP_ENTRIES} entries, got {len(values)}")
    if any(not (np.isfinite(e) and e > 0) for e in values):
        raise ConfigInvalid("eps_list", "entries must be positive and finite")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ConfigInvalid("eps_list", "entries must be strictly decreasing")
    return values


def _row(result: SolveResult, reference: SolveResult, modulus_radii: Optional[Sequence[float]]) -> SweepRow:
    holder = None
    table: tuple = ()
    if modulus_radii:
        report = time_derivative_modulus(result, modulus_radii, positive_part=True)
        table = tuple((r, osc) for r, osc in report.table)
        holder = report.holder_fit.exponent if report.holder_fit is not None else None
    return SweepRow(
        eps=result.eps_used,
        error=float(np.max(np.abs(result.u.values - reference.u.values))),
        min_gap=result.min_gap(),
        complementarity_defect=result.max_complementarity_defect(),
        max_residual=result.max_residual(),
        newton_iters=int(sum(r.newton_iters for r in result.per_step)),
        holder_exponent=holder,
        modulus_table=table,
    )


def eps_sweep(
    spec: ProblemSpec,
    grid: Optional[Grid] = None,
    eps_list: Sequence[float] = (1e-1, 1e-2, 1e-3),
    jobs: int = 1,
    reference: Optional[SolveResult] = None,
    modulus_radii: Optional[Sequence[float]] = None,
) -> SweepTable:
    """
    Convergence table of the penalized march against its reference.

    Rows follow eps_list order regardless of job scheduling.

    Raises:
        ConfigInvalid: eps_list too short or not strictly decreasing
    """
    grid = grid or spec.grid
    values = validate_eps_list(eps_list)
    specs = [spec.with_eps(e) for e in values]

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        results = list(pool.map(lambda s: march(s, grid), specs))

    if reference is not None:
        kind = "provided"
    elif spec.prototype == Prototype.DYNAMIC_THIN:
        reference, kind = results[-1], "finest_eps"
    else:
        reference, kind = solve_reference(spec, grid), "oracle"

    table = SweepTable(name=spec.name, prototype=spec.prototype, reference=kind)
    for result in results:
        row = _row(result, reference, modulus_radii)
        table.rows.append(row)
        logger.info(
            f"Sweep '{spec.name}' eps={row.eps:g}: error={row.error:.3e} "
            f"min_gap={row.min_gap:.3e} defect={row.complementarity_defect:.3e}"
        )
    return table
