"""
Problem specifications and the built-in test registry.

Prototypes:
- THICK: obstacle on every node of a box
- SIGNORINI: obstacle on the contact line of a half box, flux condition there
- DYNAMIC_THIN: contact-line condition with alpha * u_t coupling
- FRACTIONAL: (-Delta)^s evolution on a periodic line

Built-in tests carry analytic derivative data and, where one exists, a closed form.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from src.errors import ConfigInvalid, ProblemSpecInvalid
from src.fields import SampledData, ScalarField
from src.grid import Geometry, Grid, make_grid
from src.penalty import PenaltyParams
from src.profiles import heat_series_solution, signorini_profile_xy
from src.stencils import fractional_laplacian

logger = logging.getLogger(__name__)

# Slack on invariants checked in floating point
SEPARATION_TOL = 1e-12
TIME_CONSTANT_TOL = 1e-12


class Prototype(str, Enum):
    THICK = "thick"
    SIGNORINI = "signorini"
    DYNAMIC_THIN = "dynamic_thin"
    FRACTIONAL = "fractional"


REQUIRED_GEOMETRY = {
    Prototype.THICK: Geometry.BOX,
    Prototype.SIGNORINI: Geometry.HALF_BOX,
    Prototype.DYNAMIC_THIN: Geometry.HALF_BOX,
    Prototype.FRACTIONAL: Geometry.PERIODIC_LINE,
}

THIN_PROTOTYPES = (Prototype.SIGNORINI, Prototype.DYNAMIC_THIN)


def contact_mask(grid: Grid, prototype: Prototype) -> np.ndarray:
    """Nodes of the contact set: every node (thick / fractional) or the x2 = 0 row."""
    if prototype in THIN_PROTOTYPES:
        mask = np.zeros(grid.space_shape, dtype=bool)
        mask[:, 0] = True
        return mask
    return np.ones(grid.space_shape, dtype=bool)


def _constant_in_time(values: np.ndarray) -> bool:
    spread = np.max(np.abs(values - values[0]))
    return float(spread) <= TIME_CONSTANT_TOL * (1.0 + float(np.max(np.abs(values))))


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Prototype + sampled data + parameters; validated on construction."""
    prototype: Prototype
    data: SampledData
    eps: PenaltyParams
    T: float
    alpha: Optional[float] = None
    s: Optional[float] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "prototype", Prototype(self.prototype))
        proto = self.prototype

        if (self.alpha is not None) != (proto == Prototype.DYNAMIC_THIN):
            raise ProblemSpecInvalid("alpha must be given exactly for the dynamic_thin prototype")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ProblemSpecInvalid(f"alpha must lie in (0, 1], got {self.alpha}")
        if (self.s is not None) != (proto == Prototype.FRACTIONAL):
            raise ProblemSpecInvalid("s must be given exactly for the fractional prototype")
        if self.s is not None and not 0.0 < self.s <= 1.0:
            raise ProblemSpecInvalid(f"s must lie in (0, 1], got {self.s}")

        grid = self.grid
        if not self.T > 0 or abs(self.T - grid.horizon) > 1e-9 * max(1.0, self.T):
            raise ProblemSpecInvalid(f"T={self.T} does not match the grid horizon {grid.horizon}")

        separation = self.initial_separation()
        if separation < -SEPARATION_TOL:
            raise ProblemSpecInvalid(f"initial data lies below the obstacle by {-separation:.3e}")

        if proto == Prototype.DYNAMIC_THIN:
            if not _constant_in_time(self.data.f.values):
                raise ProblemSpecInvalid("dynamic_thin requires a time-independent forcing f")
            reduced = self.data.reduced_forcing()
            if reduced is not None and not _constant_in_time(reduced.values):
                raise ProblemSpecInvalid("dynamic_thin requires a caloric obstacle extension")

    @property
    def grid(self) -> Grid:
        return self.data.grid

    def contact_mask(self) -> np.ndarray:
        return contact_mask(self.grid, self.prototype)

    def initial_separation(self) -> float:
        """min over the contact set of (phi - psi) at t0."""
        gap = self.data.phi0 - self.data.psi.values[0]
        return float(np.min(gap[self.contact_mask()]))

    def initial_forcing_margin(self) -> Optional[float]:
        """
        min over the initial coincidence set of psi_t + L psi at t0, L = -Delta or (-Delta)^s.

        Returns None when psi_t (or lap_psi off the periodic line) is missing,
        or when the data start strictly separated.
        """
        data = self.data
        if data.psi_t is None:
            return None
        if self.prototype == Prototype.FRACTIONAL:
            operator = fractional_laplacian(data.psi.values[0], self.grid, self.s)
        elif data.lap_psi is not None:
            operator = -data.lap_psi.values[0]
        else:
            return None
        touching = self.contact_mask() & (data.phi0 - data.psi.values[0] <= SEPARATION_TOL)
        if not touching.any():
            return None
        return float(np.min((data.psi_t.values[0] + operator)[touching]))

    def with_eps(self, eps: float) -> "ProblemSpec":
        return dataclasses.replace(self, eps=PenaltyParams(eps))

    def with_s(self, s: float) -> "ProblemSpec":
        return dataclasses.replace(self, s=s)

    def with_alpha(self, alpha: float) -> "ProblemSpec":
        return dataclasses.replace(self, alpha=alpha)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "prototype": self.prototype.value,
            "eps": self.eps.eps,
            "T": self.T,
            "alpha": self.alpha,
            "s": self.s,
            "params": dict(self.params),
            "initial_separation": self.initial_separation(),
            "initial_forcing_margin": self.initial_forcing_margin(),
        }


# --- built-in tests -------------------------------------------------------

def _const(grid: Grid, spatial, label: str) -> ScalarField:
    return ScalarField.constant_in_time(grid, np.broadcast_to(spatial, grid.space_shape), label)


def _zeros(grid: Grid, label: str) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape), label)


def _unconstrained_heat(grid: Grid, p: dict) -> SampledData:
    (x,) = grid.axes
    phi0 = np.sin(np.pi * x)
    phi0[[0, -1]] = 0.0
    return SampledData(
        psi=_const(grid, p["psi_level"], "psi"),
        phi0=phi0,
        lateral=_zeros(grid, "lateral"),
        f=_zeros(grid, "f"),
        psi_t=_zeros(grid, "psi_t"),
        psi_tt=_zeros(grid, "psi_tt"),
        lap_psi=_zeros(grid, "lap_psi"),
        bilap_phi=np.pi ** 4 * np.sin(np.pi * x),
    )


def _heat_closed_form(grid: Grid, p: dict) -> np.ndarray:
    t, x = grid.space_time_mesh()
    values = heat_series_solution([(1, 1.0)], x, t)
    values[:, [0, -1]] = 0.0
    return values


def _thick_active(grid: Grid, p: dict) -> SampledData:
    (x,) = grid.axes
    a = p["height"]
    psi = a * (1.0 - x ** 2)
    return SampledData(
        psi=_const(grid, psi, "psi"),
        phi0=np.maximum(psi, 0.0),
        lateral=_zeros(grid, "lateral"),
        f=_zeros(grid, "f"),
        psi_t=_zeros(grid, "psi_t"),
        psi_tt=_zeros(grid, "psi_tt"),
        lap_psi=_const(grid, -2.0 * a, "lap_psi"),
    )


def _thick_separated(grid: Grid, p: dict) -> SampledData:
    t, x = grid.space_time_mesh()
    (x1,) = grid.axes
    amp, rise = p["amplitude"], p["rise"]
    phi0 = amp * np.sin(np.pi * x1)
    phi0[[0, -1]] = 0.0
    return SampledData(
        psi=ScalarField(grid, x * (1.0 - x) / 8.0 - 0.02 + rise * t, "psi"),
        phi0=phi0,
        lateral=_zeros(grid, "lateral"),
        f=_zeros(grid, "f"),
        psi_t=_const(grid, rise, "psi_t"),
        psi_tt=_zeros(grid, "psi_tt"),
        lap_psi=_const(grid, -0.25, "lap_psi"),
        bilap_phi=amp * np.pi ** 4 * np.sin(np.pi * x1),
    )


def _thin_common(grid: Grid, psi_spatial, phi0, lateral: ScalarField, extras: Optional[dict] = None) -> SampledData:
    return SampledData(
        psi=_const(grid, psi_spatial, "psi"),
        phi0=phi0,
        lateral=lateral,
        f=_zeros(grid, "f"),
        psi_t=_zeros(grid, "psi_t"),
        psi_tt=_zeros(grid, "psi_tt"),
        lap_psi=_zeros(grid, "lap_psi"),
        extras=extras or {},
    )


def _signorini_stationary(grid: Grid, p: dict) -> SampledData:
    x1, x2 = grid.mesh()
    profile = p["amplitude"] * signorini_profile_xy(x1, x2)
    return _thin_common(grid, 0.0, profile, _const(grid, profile, "lateral"))


def _signorini_traveling(grid: Grid, p: dict) -> SampledData:
    t, x1, x2 = grid.space_time_mesh()
    moving = p["amplitude"] * signorini_profile_xy(x1, x2, t, p["omega"])
    return _thin_common(grid, 0.0, moving[0], ScalarField(grid, moving, "lateral"))


def _signorini_active(grid: Grid, p: dict) -> SampledData:
    t, x1, x2 = grid.space_time_mesh()
    amplitude = p["amplitude0"] + p["growth"] * t
    lateral = amplitude * signorini_profile_xy(x1, x2)
    return _thin_common(grid, 0.0, lateral[0], ScalarField(grid, lateral, "lateral"))


def _profile_closed_form(grid: Grid, p: dict) -> np.ndarray:
    t, x1, x2 = grid.space_time_mesh()
    return signorini_profile_xy(x1, x2, t, p.get("omega", 0.0))


def _fractional_active(grid: Grid, p: dict) -> SampledData:
    (x,) = grid.axes
    bump = p["height"] - (x - np.pi) ** 2 / 16.0
    psi = np.maximum(bump, p["floor"])
    return SampledData(
        psi=_const(grid, psi, "psi"),
        phi0=np.maximum(psi, 0.0),
        lateral=_zeros(grid, "lateral"),
        f=_zeros(grid, "f"),
        psi_t=_zeros(grid, "psi_t"),
        psi_tt=_zeros(grid, "psi_tt"),
        lap_psi=_const(grid, np.where(bump > p["floor"], -0.125, 0.0), "lap_psi"),
    )


def _dynamic_caloric(grid: Grid, p: dict) -> SampledData:
    x1, x2 = grid.mesh()
    psi = -x1 ** 2 / 8.0
    phi0 = psi + p["lift"] * x2
    return SampledData(
        psi=_const(grid, psi, "psi"),
        phi0=phi0,
        lateral=_const(grid, phi0, "lateral"),
        f=_zeros(grid, "f"),
        psi_t=_zeros(grid, "psi_t"),
        psi_tt=_zeros(grid, "psi_tt"),
        lap_psi=_const(grid, -0.25, "lap_psi"),
    )


@dataclass(frozen=True)
class BuiltinTest:
    """Registry entry: default lattice, parameters and data generator."""
    name: str
    prototype: Prototype
    description: str
    geometry: Geometry
    extent: tuple
    n_space: int
    n_time: int
    T: float
    eps: float
    builder: Callable[[Grid, dict], SampledData]
    defaults: dict
    alpha: Optional[float] = None
    s: Optional[float] = None
    closed_form: Optional[Callable[[Grid, dict], np.ndarray]] = None

    @property
    def dim(self) -> int:
        return len(self.extent)


_HALF_BOX = ((-1.0, 1.0), (0.0, 1.0))

BUILTINS: dict[str, BuiltinTest] = {
    test.name: test
    for test in (
        BuiltinTest(
            name="unconstrained-heat",
            prototype=Prototype.THICK,
            description="sin(pi x) heat decay under a far obstacle",
            geometry=Geometry.BOX, extent=((0.0, 1.0),), n_space=65, n_time=101, T=0.1, eps=1e-2,
            builder=_unconstrained_heat, defaults={"psi_level": -10.0},
            closed_form=_heat_closed_form,
        ),
        BuiltinTest(
            name="thick-active",
            prototype=Prototype.THICK,
            description="concave obstacle, coincidence set shrinking from [-1, 1]",
            geometry=Geometry.BOX, extent=((-2.0, 2.0),), n_space=257, n_time=129, T=0.5, eps=1e-3,
            builder=_thick_active, defaults={"height": 0.125},
        ),
        BuiltinTest(
            name="thick-separated",
            prototype=Prototype.THICK,
            description="smooth data strictly above a rising obstacle",
            geometry=Geometry.BOX, extent=((0.0, 1.0),), n_space=65, n_time=65, T=0.3, eps=1e-3,
            builder=_thick_separated, defaults={"amplitude": 0.05, "rise": 0.05},
        ),
        BuiltinTest(
            name="signorini-stationary",
            prototype=Prototype.SIGNORINI,
            description="stationary thin-obstacle profile imposed laterally",
            geometry=Geometry.HALF_BOX, extent=_HALF_BOX, n_space=65, n_time=33, T=0.25, eps=1e-3,
            builder=_signorini_stationary, defaults={"amplitude": 0.25, "omega": 0.0},
            closed_form=_profile_closed_form,
        ),
        BuiltinTest(
            name="signorini-traveling",
            prototype=Prototype.SIGNORINI,
            description="traveling thin-obstacle profile imposed laterally",
            geometry=Geometry.HALF_BOX, extent=_HALF_BOX, n_space=65, n_time=33, T=0.25, eps=1e-3,
            builder=_signorini_traveling, defaults={"amplitude": 0.25, "omega": 0.3},
            closed_form=_profile_closed_form,
        ),
        BuiltinTest(
            name="signorini-active",
            prototype=Prototype.SIGNORINI,
            description="stationary profile with growing lateral amplitude",
            geometry=Geometry.HALF_BOX, extent=_HALF_BOX, n_space=65, n_time=33, T=0.25, eps=1e-3,
            builder=_signorini_active, defaults={"amplitude0": 0.15, "growth": 0.4, "omega": 0.0},
            closed_form=_profile_closed_form,
        ),
        BuiltinTest(
            name="fractional-active",
            prototype=Prototype.FRACTIONAL,
            description="clipped parabolic obstacle on the periodic line",
            geometry=Geometry.PERIODIC_LINE, extent=((0.0, 2.0 * np.pi),), n_space=128, n_time=65, T=0.1,
            eps=1e-2, s=0.5,
            builder=_fractional_active, defaults={"height": 0.1, "floor": -0.2},
        ),
        BuiltinTest(
            name="dynamic-caloric",
            prototype=Prototype.DYNAMIC_THIN,
            description="flat-extended parabolic obstacle with dynamic contact condition",
            geometry=Geometry.HALF_BOX, extent=_HALF_BOX, n_space=33, n_time=33, T=0.25, eps=1e-3,
            alpha=0.5,
            builder=_dynamic_caloric, defaults={"lift": 0.1},
        ),
    )
}


def list_builtins() -> list[str]:
    return sorted(BUILTINS)


def get_builtin(name: str) -> BuiltinTest:
    try:
        return BUILTINS[name]
    except KeyError:
        raise ConfigInvalid("problem.test", f"unknown built-in test '{name}' (known: {', '.join(list_builtins())})") from None


def builtin_grid(name: str, n_space: Optional[int] = None, n_time: Optional[int] = None, T: Optional[float] = None) -> Grid:
    test = get_builtin(name)
    return make_grid(
        dim=test.dim,
        geometry=test.geometry,
        n_space=n_space or test.n_space,
        n_time=n_time or test.n_time,
        extent=test.extent,
        T=T or test.T,
    )


def build_builtin(
    name: str,
    n_space: Optional[int] = None,
    n_time: Optional[int] = None,
    eps: Optional[float] = None,
    alpha: Optional[float] = None,
    s: Optional[float] = None,
    T: Optional[float] = None,
    params: Optional[dict] = None,
    grid: Optional[Grid] = None,
) -> tuple[ProblemSpec, Grid]:
    """
    Resolve a built-in test to a validated (ProblemSpec, Grid) pair.

    Raises:
        ConfigInvalid: unknown test name or unknown family parameter
    """
    test = get_builtin(name)
    merged = dict(test.defaults)
    for key, value in (params or {}).items():
        if key not in test.defaults:
            raise ConfigInvalid(f"problem.params.{key}", f"not a parameter of '{name}'")
        merged[key] = float(value)

    grid = grid or builtin_grid(name, n_space, n_time, T)
    spec = ProblemSpec(
        prototype=test.prototype,
        data=test.builder(grid, merged),
        eps=PenaltyParams(eps if eps is not None else test.eps),
        T=grid.horizon,
        alpha=(alpha if alpha is not None else test.alpha) if test.prototype == Prototype.DYNAMIC_THIN else None,
        s=(s if s is not None else test.s) if test.prototype == Prototype.FRACTIONAL else None,
        name=name,
        params=merged,
    )
    logger.debug(f"Built-in '{name}' resolved on grid {grid.shape} eps={spec.eps.eps}")
    return spec, grid


def closed_form_field(name: str, grid: Grid, params: Optional[dict] = None) -> Optional[ScalarField]:
    """Amplitude-one closed form attached to a built-in, sampled on `grid`."""
    test = get_builtin(name)
    if test.closed_form is None:
        return None
    merged = dict(test.defaults)
    merged.update(params or {})
    return ScalarField(grid, test.closed_form(grid, merged), f"{name}:closed_form")
