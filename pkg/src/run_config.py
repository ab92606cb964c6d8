"""
Run Configuration - CLI flags, problem documents and environment defaults

Supports:
- OBSTACLE_LAB_OUT, OBSTACLE_LAB_JOBS, OBSTACLE_LAB_SEED, OBSTACLE_LAB_LOG_LEVEL
  environment variables (malformed values fall back to defaults with a warning)
- JSON problem documents naming a built-in test plus overrides
- Precedence: CLI flags > problem document > environment > defaults
"""
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from src.errors import ConfigInvalid
from src.grid import Grid
from src.problems import ProblemSpec, build_builtin, get_builtin
from src.sweep import validate_eps_list

logger = logging.getLogger(__name__)

COMMANDS = ("solve", "sweep", "diagnose", "verify")
DEFAULT_OUT_DIR = "./runs"
DEFAULT_JOBS = 1
DEFAULT_SEED = 0
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_SWEEP_EPS = (1e-1, 1e-2, 1e-3)
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# Field -> accepted JSON types of a problem document
_DOCUMENT_FIELDS = {
    "test": (str,),
    "eps": (int, float),
    "eps_list": (list,),
    "alpha": (int, float),
    "s": (int, float),
    "T": (int, float),
    "grid": (dict,),
    "params": (dict,),
    "out_dir": (str,),
    "jobs": (int,),
    "seed": (int,),
}


@dataclass(frozen=True)
class EnvDefaults:
    """Run defaults from environment."""
    out_dir: str
    jobs: int
    seed: int
    log_level: str


@dataclass(frozen=True)
class RunConfig:
    command: str
    test: Optional[str] = None
    config_path: Optional[str] = None
    n_space: Optional[int] = None
    n_time: Optional[int] = None
    eps_list: tuple = ()
    out_dir: str = DEFAULT_OUT_DIR
    jobs: int = DEFAULT_JOBS
    seed: int = DEFAULT_SEED
    overrides: dict = field(default_factory=dict)
    only: tuple = ()
    log_level: str = DEFAULT_LOG_LEVEL
    argv: tuple = ()

    @property
    def eps(self) -> Optional[float]:
        return self.eps_list[0] if self.eps_list else None

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "test": self.test,
            "config_path": self.config_path,
            "n_space": self.n_space,
            "n_time": self.n_time,
            "eps_list": list(self.eps_list),
            "out_dir": self.out_dir,
            "jobs": self.jobs,
            "seed": self.seed,
            "overrides": dict(self.overrides),
            "only": list(self.only),
        }


def get_env_defaults() -> EnvDefaults:
    """
    Load run defaults from environment.

    Environment variables:
    - OBSTACLE_LAB_OUT (default: ./runs)
    - OBSTACLE_LAB_JOBS (default: 1)
    - OBSTACLE_LAB_SEED (default: 0)
    - OBSTACLE_LAB_LOG_LEVEL (default: INFO)
    """
    out_dir = os.environ.get("OBSTACLE_LAB_OUT", DEFAULT_OUT_DIR).strip() or DEFAULT_OUT_DIR

    jobs_str = os.environ.get("OBSTACLE_LAB_JOBS", str(DEFAULT_JOBS)).strip()
    try:
        jobs = int(jobs_str)
        if jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {jobs}")
    except ValueError as e:
        logger.warning(f"Invalid OBSTACLE_LAB_JOBS '{jobs_str}': {e}. Using default {DEFAULT_JOBS}")
        jobs = DEFAULT_JOBS

    seed_str = os.environ.get("OBSTACLE_LAB_SEED", str(DEFAULT_SEED)).strip()
    try:
        seed = int(seed_str)
    except ValueError as e:
        logger.warning(f"Invalid OBSTACLE_LAB_SEED '{seed_str}': {e}. Using default {DEFAULT_SEED}")
        seed = DEFAULT_SEED

    level = os.environ.get("OBSTACLE_LAB_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper()
    if level not in LOG_LEVELS:
        logger.warning(
            f"Invalid OBSTACLE_LAB_LOG_LEVEL '{level}', falling back to {DEFAULT_LOG_LEVEL}. "
            f"Valid values: {', '.join(LOG_LEVELS)}"
        )
        level = DEFAULT_LOG_LEVEL

    return EnvDefaults(out_dir=out_dir, jobs=jobs, seed=seed, log_level=level)


def parse_eps_list(text: str, path: str = "eps") -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigInvalid(path, f"expected comma-separated numbers, got '{text}'") from None
    if not values:
        raise ConfigInvalid(path, "no value given")
    if any(not v > 0 for v in values):
        raise ConfigInvalid(path, "values must be positive")
    return values


def parse_grid(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    try:
        nx, nt = (int(p) for p in parts)
    except ValueError:
        raise ConfigInvalid("grid", f"expected NX,NT, got '{text}'") from None
    if nx < 3 or nt < 3:
        raise ConfigInvalid("grid", f"need NX >= 3 and NT >= 3, got {nx},{nt}")
    return nx, nt


def _check_type(value: Any, types: tuple, path: str) -> None:
    if isinstance(value, bool) or not isinstance(value, types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigInvalid(path, f"expected {names}, got {type(value).__name__}")


def validate_problem_document(doc: Any) -> dict:
    """
    Hand validation against docs/problem_spec.schema.json.

    Raises:
        ConfigInvalid: path of the first offending field
    """
    if not isinstance(doc, dict):
        raise ConfigInvalid("problem", "document must be a JSON object")
    if "test" not in doc:
        raise ConfigInvalid("problem.test", "required field missing")
    for key, value in doc.items():
        if key not in _DOCUMENT_FIELDS:
            raise ConfigInvalid(f"problem.{key}", "unknown field")
        _check_type(value, _DOCUMENT_FIELDS[key], f"problem.{key}")

    for key in ("eps", "T"):
        if key in doc and not doc[key] > 0:
            raise ConfigInvalid(f"problem.{key}", f"must be positive, got {doc[key]}")
    for key in ("alpha", "s"):
        if key in doc and not 0 < doc[key] <= 1:
            raise ConfigInvalid(f"problem.{key}", f"must lie in (0, 1], got {doc[key]}")
    if "jobs" in doc and doc["jobs"] < 1:
        raise ConfigInvalid("problem.jobs", f"must be >= 1, got {doc['jobs']}")
    if "eps_list" in doc:
        for i, value in enumerate(doc["eps_list"]):
            _check_type(value, (int, float), f"problem.eps_list.{i}")
            if not value > 0:
                raise ConfigInvalid(f"problem.eps_list.{i}", f"must be positive, got {value}")

    grid = doc.get("grid", {})
    for key, value in grid.items():
        if key not in ("n_space", "n_time"):
            raise ConfigInvalid(f"problem.grid.{key}", "unknown field")
        _check_type(value, (int,), f"problem.grid.{key}")
    if grid.get("n_space", 3) < 3:
        raise ConfigInvalid("problem.grid.n_space", "must be >= 3")
    if grid.get("n_time", 3) < 3:
        raise ConfigInvalid("problem.grid.n_time", "must be >= 3")

    for key, value in doc.get("params", {}).items():
        _check_type(value, (int, float), f"problem.params.{key}")

    test = get_builtin(doc["test"])
    unknown = sorted(set(doc.get("params", {})) - set(test.defaults))
    if unknown:
        raise ConfigInvalid(f"problem.params.{unknown[0]}", f"not a parameter of '{test.name}'")
    return doc


def load_problem_document(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigInvalid("config", f"file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigInvalid("config", f"JSON decode error: {e}") from None
    return validate_problem_document(doc)


def resolve_config(
    command: str,
    test: Optional[str] = None,
    config_path: Optional[str] = None,
    eps: Optional[str] = None,
    grid: Optional[str] = None,
    out_dir: Optional[str] = None,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
    only: Optional[str] = None,
    argv: tuple = (),
) -> RunConfig:
    """
    Merge CLI flags, the problem document and environment defaults.

    Raises:
        ConfigInvalid: unknown command, malformed flag or document field
    """
    if command not in COMMANDS:
        raise ConfigInvalid("command", f"expected one of {COMMANDS}, got '{command}'")
    env = get_env_defaults()
    doc = load_problem_document(config_path) if config_path else {}

    test = test or doc.get("test")
    if command in ("solve", "sweep"):
        if test is None:
            raise ConfigInvalid("problem.test", "give --test NAME or --config PATH")
        get_builtin(test)

    if eps is not None:
        eps_list = parse_eps_list(eps)
    elif "eps_list" in doc:
        eps_list = tuple(float(e) for e in doc["eps_list"])
    elif "eps" in doc:
        eps_list = (float(doc["eps"]),)
    else:
        eps_list = DEFAULT_SWEEP_EPS if command == "sweep" else ()
    if command == "solve" and len(eps_list) > 1:
        raise ConfigInvalid("eps", f"solve takes a single value, got {len(eps_list)}")
    if command == "sweep":
        eps_list = tuple(validate_eps_list(eps_list))

    doc_grid = doc.get("grid", {})
    n_space, n_time = parse_grid(grid) if grid else (doc_grid.get("n_space"), doc_grid.get("n_time"))

    jobs = jobs if jobs is not None else doc.get("jobs", env.jobs)
    if jobs < 1:
        raise ConfigInvalid("jobs", f"must be >= 1, got {jobs}")

    overrides = {key: doc[key] for key in ("alpha", "s", "T") if key in doc}
    if doc.get("params"):
        overrides["params"] = dict(doc["params"])

    return RunConfig(
        command=command,
        test=test,
        config_path=str(config_path) if config_path else None,
        n_space=n_space,
        n_time=n_time,
        eps_list=tuple(eps_list),
        out_dir=out_dir or doc.get("out_dir") or env.out_dir,
        jobs=int(jobs),
        seed=seed if seed is not None else doc.get("seed", env.seed),
        overrides=overrides,
        only=tuple(p.strip() for p in only.split(",") if p.strip()) if only else (),
        log_level=env.log_level,
        argv=tuple(argv),
    )


def build_problem(config: RunConfig, eps: Optional[float] = None) -> tuple[ProblemSpec, Grid]:
    """Resolve the configured built-in and overrides to a (ProblemSpec, Grid)."""
    overrides = config.overrides
    return build_builtin(
        config.test,
        n_space=config.n_space,
        n_time=config.n_time,
        eps=eps if eps is not None else config.eps,
        alpha=overrides.get("alpha"),
        s=overrides.get("s"),
        T=overrides.get("T"),
        params=overrides.get("params"),
    )


def log_run_config(config: RunConfig) -> None:
    """Log concise startup diagnostics (single line per component)."""
    logger.info(f"Command: {config.command}")
    if config.test:
        source = f" (from {config.config_path})" if config.config_path else ""
        logger.info(f"Problem: {config.test}{source} overrides={config.overrides or '{}'}")
    if config.n_space or config.n_time:
        logger.info(f"Grid: n_space={config.n_space} n_time={config.n_time}")
    if config.eps_list:
        logger.info(f"Penalty: eps={', '.join(f'{e:g}' for e in config.eps_list)}")
    logger.info(f"Output: {config.out_dir} jobs={config.jobs} seed={config.seed}")
