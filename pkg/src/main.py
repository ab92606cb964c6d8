"""
Main entrypoint - penalized obstacle-problem lab

Commands:
- solve:    march one problem, write fields, per-step log and result.json
- sweep:    eps-convergence table against the exact-constraint reference
- diagnose: regularity report from a solve output directory
- verify:   acceptance suite, one [PASS]/[FAIL] line per criterion

Exit status: 0 success, 1 verify failure, 2 configuration / solver / diagnostic error.
"""
import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from src.acceptance import evaluate_criteria, verify_report
from src.errors import ConfigInvalid, ObstacleLabError
from src.problems import BUILTINS, Prototype, build_builtin
from src.report import build_regularity_report, plots_manifest
from src.run_config import RunConfig, build_problem, log_run_config, resolve_config
from src.serialization import load_field, read_json, save_field, save_field_csv, write_csv, write_grid, write_json
from src.solvers import SolveResult, march
from src.step_logger import StepLogger
from src.sweep import eps_sweep

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)

logger = logging.getLogger(__name__)

VERSION = "0.1.0"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m src.main", description="Penalized obstacle-problem lab")
    commands = parser.add_subparsers(dest="command", required=True)

    def problem_flags(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--test", help=f"built-in test ({', '.join(sorted(BUILTINS))})")
        sub.add_argument("--config", help="JSON problem document")
        sub.add_argument("--grid", help="NX,NT")
        sub.add_argument("--out", help="output directory")

    solve = commands.add_parser("solve", help="march one problem")
    problem_flags(solve)
    solve.add_argument("--eps", help="penalty parameter")

    sweep = commands.add_parser("sweep", help="eps-convergence table")
    problem_flags(sweep)
    sweep.add_argument("--eps", help="E1,E2,E3 (strictly decreasing)")
    sweep.add_argument("--jobs", type=int)

    diagnose = commands.add_parser("diagnose", help="regularity report of a solve directory")
    diagnose.add_argument("--out", required=True, help="solve output directory")

    verify = commands.add_parser("verify", help="acceptance suite")
    verify.add_argument("--out", help="output directory")
    verify.add_argument("--jobs", type=int)
    verify.add_argument("--only", help="CRITERION[,CRITERION...]")
    return parser


def config_from_args(args: argparse.Namespace, argv: Sequence[str] = ()) -> RunConfig:
    return resolve_config(
        command=args.command,
        test=getattr(args, "test", None),
        config_path=getattr(args, "config", None),
        eps=getattr(args, "eps", None),
        grid=getattr(args, "grid", None),
        out_dir=getattr(args, "out", None),
        jobs=getattr(args, "jobs", None),
        only=getattr(args, "only", None),
        argv=tuple(argv),
    )


# --- commands -------------------------------------------------------------------

def _solve(config: RunConfig, out: Path) -> int:
    spec, grid = build_problem(config)
    out.mkdir(parents=True, exist_ok=True)
    steps_path = out / "steps.csv"
    if steps_path.exists():
        steps_path.unlink()

    with StepLogger(log_dir=str(out)) as step_logger:
        result = march(spec, grid, step_logger=step_logger)

    save_field(out / "u.npz", result.u)
    save_field(out / "v.npz", result.v)
    save_field(out / "psi.npz", result.psi)
    save_field_csv(out / "u.csv", result.u)
    write_grid(out / "grid.json", grid)
    payload = result.to_dict()
    payload["problem"] = spec.to_dict()
    write_json(out / "result.json", payload)
    logger.info(f"Solve artifacts written to {out}")
    return 0


def _sweep(config: RunConfig, out: Path) -> int:
    spec, grid = build_problem(config, eps=config.eps_list[-1])
    table = eps_sweep(spec, grid, config.eps_list, jobs=config.jobs)
    write_json(out / "sweep.json", table.to_dict())
    write_csv(out / "sweep.csv", table.csv_rows())
    logger.info(f"Sweep table written to {out} (errors strictly decreasing: {table.errors_strictly_decreasing()})")
    return 0


def load_solve_directory(out: Path) -> tuple[SolveResult, dict]:
    """SolveResult and problem block from a solve output directory."""
    path = out / "result.json"
    if not path.exists():
        raise ConfigInvalid("out", f"{out} is not a solve output directory (no result.json)")
    meta = read_json(path)
    result = SolveResult(
        u=load_field(out / "u.npz"),
        v=load_field(out / "v.npz"),
        psi=load_field(out / "psi.npz"),
        per_step=[],
        eps_used=float(meta["eps_used"]),
        prototype=Prototype(meta["prototype"]),
        name=meta["name"],
    )
    return result, meta.get("problem", {})


def _diagnose(config: RunConfig, out: Path) -> int:
    result, problem = load_solve_directory(out)
    data, margin = None, None
    if result.name in BUILTINS:
        spec, _ = build_builtin(
            result.name,
            eps=problem.get("eps"),
            alpha=problem.get("alpha"),
            s=problem.get("s"),
            params=problem.get("params"),
            grid=result.grid,
        )
        data, margin = spec.data, spec.initial_forcing_margin()

    report = build_regularity_report(result, data, initial_forcing_margin=margin)
    write_json(out / "report.json", report.to_dict())
    write_csv(out / "modulus.csv", report.modulus_rows())
    write_csv(out / "density.csv", report.density_rows())
    write_csv(out / "phi.csv", report.phi_rows())
    write_json(out / "plots.json", plots_manifest())
    logger.info(f"Regularity report written to {out}")
    return 0


def _verify(config: RunConfig, out: Path) -> int:
    results = evaluate_criteria(config.only, jobs=config.jobs, seed=config.seed)
    for result in results:
        print(result.line())
    report = verify_report(results)
    write_json(out / "verify.json", report)
    return 0 if report["passed"] else 1


_COMMANDS = {"solve": _solve, "sweep": _sweep, "diagnose": _diagnose, "verify": _verify}


def run(config: RunConfig) -> int:
    """
    Execute one command and write its artifacts plus run_meta.json.

    Returns:
        0 on success, 1 when verify has a failing criterion

    Raises:
        ObstacleLabError: configuration, solver or diagnostic failure
    """
    log_run_config(config)
    out = Path(config.out_dir)
    started = datetime.now(timezone.utc)
    start_mono = time.monotonic()

    status = _COMMANDS[config.command](config, out)

    write_json(out / "run_meta.json", {
        "schema_version": "run_meta.v1",
        "command": config.command,
        "argv": list(config.argv),
        "config": config.to_dict(),
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "seconds": time.monotonic() - start_mono,
        "version": VERSION,
        "exit_status": status,
    })
    logger.info(f"Command '{config.command}' finished with status {status}")
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args, argv)
        logging.getLogger().setLevel(config.log_level)
        return run(config)
    except ObstacleLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
