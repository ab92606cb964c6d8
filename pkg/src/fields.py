"""
Field containers (field.v1)

- ScalarField: immutable samples over (time level, space multi-index)
- IncrementalQuotient: quotient values plus availability mask
- SampledData: obstacle, initial/lateral data, forcing and analytic derivatives
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.errors import NonFiniteField, ProblemSpecInvalid, ShapeMismatch
from src.grid import Geometry, Grid

# Compatibility slack between lateral data and phi0 at t0
COMPAT_TOL = 1e-12


def _frozen_copy(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples on every node of `grid` at every time level."""
    grid: Grid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = _frozen_copy(self.values)
        if arr.shape != self.grid.shape:
            raise ShapeMismatch(f"field '{self.label}' has shape {arr.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteField(f"field '{self.label}' contains NaN/Inf")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, grid: Grid, func, label: str = "") -> "ScalarField":
        """Sample func(t, x1[, x2]) on the space-time lattice."""
        return cls(grid, np.broadcast_to(func(*grid.space_time_mesh()), grid.shape), label)

    @classmethod
    def constant_in_time(cls, grid: Grid, slice_values, label: str = "") -> "ScalarField":
        spatial = np.asarray(slice_values, dtype=float)
        if spatial.shape != grid.space_shape:
            raise ShapeMismatch(f"slice shape {spatial.shape} != {grid.space_shape}")
        return cls(grid, np.broadcast_to(spatial, grid.shape), label)

    def level(self, k: int) -> np.ndarray:
        return self.values[k]

    def positive_part(self) -> "ScalarField":
        return ScalarField(self.grid, np.maximum(self.values, 0.0), f"{self.label}+")

    def scaled(self, factor: float) -> "ScalarField":
        return ScalarField(self.grid, factor * self.values, self.label)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        if other.grid != self.grid:
            raise ShapeMismatch("fields live on different grids")
        return ScalarField(self.grid, self.values - other.values, f"{self.label}-{other.label}")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class IncrementalQuotient:
    """Second incremental quotient; entries with available=False are set to 0."""
    grid: Grid
    values: np.ndarray
    available: np.ndarray
    offsets: tuple[int, ...]

    @property
    def field(self) -> ScalarField:
        return ScalarField(self.grid, self.values, "second_quotient")

    def min(self, mask: Optional[np.ndarray] = None) -> float:
        sel = self.available if mask is None else (self.available & mask)
        return float(np.min(self.values[sel]))

    def argmin(self, mask: Optional[np.ndarray] = None) -> tuple[int, ...]:
        sel = self.available if mask is None else (self.available & mask)
        masked = np.where(sel, self.values, np.inf)
        return tuple(int(i) for i in np.unravel_index(int(np.argmin(masked)), masked.shape))


@dataclass(frozen=True, eq=False)
class SampledData:
    """
    Problem data sampled on one grid.

    psi is the obstacle extension over the whole grid (constant in x2 on a half box).
    lateral holds values for every node; only Dirichlet nodes are read.
    Derivative fields are optional and always analytic.
    """
    psi: ScalarField
    phi0: np.ndarray
    lateral: ScalarField
    f: ScalarField
    psi_t: Optional[ScalarField] = None
    psi_tt: Optional[ScalarField] = None
    lap_psi: Optional[ScalarField] = None
    bilap_phi: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = self.psi.grid
        for name in ("lateral", "f", "psi_t", "psi_tt", "lap_psi"):
            item = getattr(self, name)
            if item is not None and item.grid != grid:
                raise ShapeMismatch(f"{name} lives on a different grid than psi")
        phi0 = _frozen_copy(self.phi0)
        if phi0.shape != grid.space_shape:
            raise ShapeMismatch(f"phi0 shape {phi0.shape} != {grid.space_shape}")
        object.__setattr__(self, "phi0", phi0)
        if self.bilap_phi is not None:
            bilap = _frozen_copy(self.bilap_phi)
            if bilap.shape != grid.space_shape:
                raise ShapeMismatch(f"bilap_phi shape {bilap.shape} != {grid.space_shape}")
            object.__setattr__(self, "bilap_phi", bilap)

        boundary = grid.dirichlet_mask()
        mismatch = np.abs(self.lateral.values[0][boundary] - phi0[boundary])
        if mismatch.size and float(mismatch.max()) > COMPAT_TOL * (1.0 + float(np.abs(phi0).max())):
            raise ProblemSpecInvalid(f"lateral data at t0 differs from phi0 by {mismatch.max():.3e}")

        if grid.geometry == Geometry.HALF_BOX:
            spread = np.ptp(self.f.values, axis=2)
            if float(spread.max()) > COMPAT_TOL * (1.0 + self.f.max_abs()):
                raise ProblemSpecInvalid("forcing f must be constant along x2 on a half box")

    @property
    def grid(self) -> Grid:
        return self.psi.grid

    def reduced_forcing(self) -> Optional[ScalarField]:
        """-(lap psi - psi_t): forcing seen by u - psi, when both derivatives are known."""
        if self.lap_psi is None or self.psi_t is None:
            return None
        return ScalarField(self.grid, self.psi_t.values - self.lap_psi.values, "reduced_forcing")
