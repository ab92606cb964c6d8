"""
Error hierarchy for the obstacle lab.

Conventions:
- Every failure raised by the package derives from ObstacleLabError
- Bad inputs additionally derive from ValueError
- Iterations that fail to converge derive from SolverError (a RuntimeError)
  and carry residual / iteration / time-level context
"""
from typing import Optional


class ObstacleLabError(Exception):
    """Base class for all obstacle-lab errors."""


# --- core -----------------------------------------------------------------

class InvalidGeometry(ObstacleLabError, ValueError):
    """Geometry inconsistent with dimension or extent."""


class DegenerateGrid(ObstacleLabError, ValueError):
    """Too few nodes / time levels, or empty extent."""


class ShapeMismatch(ObstacleLabError, ValueError):
    """Array shape does not match its grid."""


class NonFiniteField(ObstacleLabError, ValueError):
    """Field values contain NaN or Inf."""


class StepTooLarge(ObstacleLabError, ValueError):
    """No node has both neighbours of an incremental quotient inside the grid."""


# --- problems / solvers ---------------------------------------------------

class ProblemSpecInvalid(ObstacleLabError, ValueError):
    """ProblemSpec violates one of its invariants."""


class GeometryMismatch(ObstacleLabError, ValueError):
    """Stepper called on a grid of the wrong geometry."""


class SolverError(ObstacleLabError, RuntimeError):
    """Iteration failed to converge."""

    def __init__(
        self,
        message: str,
        residual: Optional[float] = None,
        iterations: Optional[int] = None,
        time_level: Optional[int] = None,
    ):
        super().__init__(message)
        self.message = message
        self.residual = residual
        self.iterations = iterations
        self.time_level = time_level

    def __str__(self) -> str:
        parts = [self.message]
        if self.time_level is not None:
            parts.append(f"time_level={self.time_level}")
        if self.iterations is not None:
            parts.append(f"iterations={self.iterations}")
        if self.residual is not None:
            parts.append(f"residual={self.residual:.3e}")
        return " ".join(parts)


class NewtonDiverged(SolverError):
    """Damped Newton hit its iteration cap or damping floor."""


class PicardStalled(SolverError):
    """Fixed-point iteration on the penalty term exceeded its cap."""


class NotConverged(SolverError):
    """Projected relaxation did not reach tolerance."""

    def __init__(self, max_iters: int, defect: float, time_level: Optional[int] = None):
        super().__init__(
            "projected relaxation not converged",
            residual=defect,
            iterations=max_iters,
            time_level=time_level,
        )
        self.max_iters = max_iters
        self.defect = defect


class IterationStalled(SolverError):
    """Inverse-power iteration did not settle."""


# --- diagnostics ----------------------------------------------------------

class MissingDerivativeData(ObstacleLabError, ValueError):
    """Analytic derivative data (psi_tt, bilaplacian of phi) not supplied."""


class RadiiUnresolvable(ObstacleLabError, ValueError):
    """Radius below two cells, or window leaving the grid."""


class CenterNotZero(ObstacleLabError, ValueError):
    """Monotonicity functional requires w to vanish at the center."""


class StripOutsideGrid(ObstacleLabError, ValueError):
    """Time strip or cutoff ball not contained in the grid."""


class WindowOutsideGrid(ObstacleLabError, ValueError):
    """Blow-up window does not map into the grid."""


class EmptyFreeBoundary(ObstacleLabError, ValueError):
    """No interface point found in any snapshot."""


class GapTolTooSmall(ObstacleLabError, ValueError):
    """Coincidence threshold below the penalty layer width."""


# --- cli ------------------------------------------------------------------

class ConfigInvalid(ObstacleLabError, ValueError):
    """Run configuration failed validation; `path` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
