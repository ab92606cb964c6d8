"""
Grid - uniform space-time lattice (grid.v1)

Supports:
- Box (dim 1 or 2), HalfBoxWithGamma (dim 2, contact line x2 = 0), PeriodicLine (dim 1)
- Uniform spacing h on every axis; first axis carries n_space nodes
- JSON-friendly to_dict / from_dict
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from src.errors import DegenerateGrid, InvalidGeometry

logger = logging.getLogger(__name__)

# Relative slack when checking that an axis length is a multiple of h
_AXIS_MULTIPLE_TOL = 1e-9


class Geometry(str, Enum):
    BOX = "box"
    HALF_BOX = "half_box_with_gamma"
    PERIODIC_LINE = "periodic_line"


@dataclass(frozen=True)
class Grid:
    """
    Uniform tensor-product lattice over Omega x [t0, t0 + T].

    Schema version: grid.v1
    """
    dim: int
    geometry: Geometry
    n_space: int
    h: float
    n_time: int
    dt: float
    t0: float
    extent: tuple[tuple[float, float], ...]

    @property
    def horizon(self) -> float:
        """Length T of the time interval."""
        return self.dt * (self.n_time - 1)

    @property
    def periodic(self) -> bool:
        return self.geometry == Geometry.PERIODIC_LINE

    @cached_property
    def axis_sizes(self) -> tuple[int, ...]:
        sizes = [self.n_space]
        for lo, hi in self.extent[1:]:
            sizes.append(int(round((hi - lo) / self.h)) + 1)
        return tuple(sizes)

    @property
    def space_shape(self) -> tuple[int, ...]:
        return self.axis_sizes

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_time,) + self.axis_sizes

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(lo + self.h * np.arange(n) for (lo, _), n in zip(self.extent, self.axis_sizes))

    @cached_property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_time)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Spatial coordinate arrays, each of shape space_shape."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def space_time_mesh(self) -> tuple[np.ndarray, ...]:
        """(t, x1[, x2]) coordinate arrays, each of shape `shape`."""
        return tuple(np.meshgrid(self.times, *self.axes, indexing="ij"))

    def level_of(self, t: float) -> int:
        """Index of the time level at t (must sit on the lattice)."""
        k = (t - self.t0) / self.dt
        level = int(round(k))
        if abs(k - level) > 1e-6 or not 0 <= level < self.n_time:
            raise ValueError(f"t={t} is not a time level of the grid")
        return level

    def dirichlet_mask(self) -> np.ndarray:
        """Nodes carrying lateral (Dirichlet) data."""
        mask = np.zeros(self.space_shape, dtype=bool)
        if self.periodic:
            return mask
        if self.dim == 1:
            mask[0] = mask[-1] = True
            return mask
        mask[0, :] = mask[-1, :] = True
        mask[:, -1] = True
        if self.geometry == Geometry.BOX:
            mask[:, 0] = True
        return mask

    def gamma_mask(self) -> np.ndarray:
        """Contact-line nodes (x2 = 0) that are not Dirichlet nodes."""
        mask = np.zeros(self.space_shape, dtype=bool)
        if self.geometry == Geometry.HALF_BOX:
            mask[1:-1, 0] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "schema_version": "grid.v1",
            "dim": self.dim,
            "geometry": self.geometry.value,
            "n_space": self.n_space,
            "h": self.h,
            "n_time": self.n_time,
            "dt": self.dt,
            "t0": self.t0,
            "extent": [list(pair) for pair in self.extent],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        return make_grid(
            dim=data["dim"],
            geometry=data["geometry"],
            n_space=data["n_space"],
            n_time=data["n_time"],
            extent=data["extent"],
            T=data["dt"] * (data["n_time"] - 1),
            t0=data.get("t0", 0.0),
        )


ExtentLike = Union[Sequence[float], Sequence[Sequence[float]]]


def _normalize_extent(extent: ExtentLike, dim: int) -> tuple[tuple[float, float], ...]:
    arr = np.asarray(extent, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (dim, 1))
    if arr.shape != (dim, 2):
        raise InvalidGeometry(f"extent must be [lo, hi] or {dim} pairs, got shape {arr.shape}")
    for lo, hi in arr:
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            raise DegenerateGrid(f"empty or non-finite extent [{lo}, {hi}]")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


def make_grid(
    dim: int,
    geometry: Union[Geometry, str],
    n_space: int,
    n_time: int,
    extent: ExtentLike,
    T: float,
    t0: float = 0.0,
) -> Grid:
    """
    Build a Grid and check every lattice invariant.

    h = L / (n_space - 1) on a bounded first axis, L / n_space on the periodic line.
    Remaining axes reuse h, so their lengths must be integer multiples of it.
    dt = T / (n_time - 1).

    Raises:
        InvalidGeometry: geometry/dimension clash, axis not a multiple of h
        DegenerateGrid: n_space < 3, n_time < 3, T <= 0, empty extent
    """
    try:
        geometry = Geometry(geometry)
    except ValueError:
        raise InvalidGeometry(f"unknown geometry '{geometry}'") from None

    if dim not in (1, 2):
        raise InvalidGeometry(f"dim must be 1 or 2, got {dim}")
    if geometry == Geometry.HALF_BOX and dim != 2:
        raise InvalidGeometry("half_box_with_gamma requires dim=2")
    if geometry == Geometry.PERIODIC_LINE and dim != 1:
        raise InvalidGeometry("periodic_line requires dim=1")

    if n_space < 3:
        raise DegenerateGrid(f"n_space must be >= 3, got {n_space}")
    if n_time < 3:
        raise DegenerateGrid(f"n_time must be >= 3, got {n_time}")
    if not (T > 0 and np.isfinite(T)):
        raise DegenerateGrid(f"T must be positive, got {T}")

    ext = _normalize_extent(extent, dim)
    length0 = ext[0][1] - ext[0][0]
    h = length0 / n_space if geometry == Geometry.PERIODIC_LINE else length0 / (n_space - 1)

    for axis, (lo, hi) in enumerate(ext[1:], start=1):
        cells = (hi - lo) / h
        if abs(cells - round(cells)) > _AXIS_MULTIPLE_TOL * max(1.0, cells):
            raise InvalidGeometry(f"axis {axis} length {hi - lo} is not a multiple of h={h}")
        if round(cells) + 1 < 3:
            raise DegenerateGrid(f"axis {axis} has fewer than 3 nodes")

    if geometry == Geometry.HALF_BOX and ext[1][0] != 0.0:
        raise InvalidGeometry(f"contact line requires x2 to start at 0, got {ext[1][0]}")

    grid = Grid(
        dim=dim,
        geometry=geometry,
        n_space=int(n_space),
        h=h,
        n_time=int(n_time),
        dt=T / (n_time - 1),
        t0=float(t0),
        extent=ext,
    )
    logger.debug(f"Grid built: {geometry.value} dim={dim} shape={grid.shape} h={h:.4g} dt={grid.dt:.4g}")
    return grid
