"""
Tests for the command-line entrypoint

Validates:
- solve writes fields, per-step log, result.json and run_meta.json
- diagnose re-reads a solve directory and writes the regularity report
- Configuration errors exit with status 2 and an error line on stderr
- The module runs as `python -m src.main`
"""
import subprocess
import sys
from pathlib import Path

import pytest

from src.main import build_parser, load_solve_directory, main
from src.report_validator import validate_report_file
from src.serialization import read_json
from src.step_logger import read_steps

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.mark.timeout(300)
def test_solve_then_diagnose(tmp_path):
    out = tmp_path / "thick"
    assert main(["solve", "--test", "thick-active", "--grid", "33,9", "--out", str(out)]) == 0

    for name in ("u.npz", "v.npz", "psi.npz", "u.csv", "grid.json", "result.json", "steps.csv", "run_meta.json"):
        assert (out / name).exists(), name
    assert validate_report_file(out / "result.json", "solve_result.v1").success
    assert len(read_steps(out / "steps.csv")) == 8

    meta = read_json(out / "run_meta.json")
    assert meta["command"] == "solve"
    assert meta["exit_status"] == 0
    assert meta["argv"][:2] == ["solve", "--test"]

    result, problem = load_solve_directory(out)
    assert result.name == "thick-active"
    assert result.grid.shape == (9, 33)
    assert problem["eps"] == 1e-3

    assert main(["diagnose", "--out", str(out)]) == 0
    assert validate_report_file(out / "report.json", "regularity_report.v1").success
    for name in ("modulus.csv", "density.csv", "phi.csv", "plots.json"):
        assert (out / name).exists(), name
    assert read_json(out / "run_meta.json")["command"] == "diagnose"


def test_solve_twice_replaces_step_log(tmp_path):
    args = ["solve", "--test", "unconstrained-heat", "--grid", "17,5", "--eps", "0.01", "--out", str(tmp_path)]
    assert main(args) == 0
    assert main(args) == 0
    assert len(read_steps(tmp_path / "steps.csv")) == 4
    assert read_json(tmp_path / "result.json")["eps_used"] == 0.01


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["solve", "--test", "no-such-test", "--out", str(tmp_path)]) == 2
    assert "error: problem.test" in capsys.readouterr().err

    assert main(["diagnose", "--out", str(tmp_path / "empty")]) == 2
    assert main(["verify", "--only", "NOPE", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--test", "thick-active", "--eps", "0.1", "--out", str(tmp_path)]) == 2


def test_parser_subcommands():
    parser = build_parser()
    args = parser.parse_args(["sweep", "--test", "thick-active", "--jobs", "2"])
    assert (args.command, args.test, args.jobs) == ("sweep", "thick-active", 2)
    assert parser.parse_args(["verify", "--only", "INVARIANT_SUITES"]).only == "INVARIANT_SUITES"


def test_module_entrypoint(tmp_path):
    """Test the CLI as a subprocess (python -m src.main)."""
    proc = subprocess.run(
        [sys.executable, "-m", "src.main", "verify", "--only", "NOPE", "--out", str(tmp_path)],
        cwd=REPO_ROOT,
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 2
    assert "error: only" in proc.stderr
