"""
Tests for the report validator

Validates:
- Reports produced by the package pass
- Missing keys / unknown or unexpected schema fail with a reason
- Missing and malformed files are reported, not raised
"""
import json

import numpy as np

from src.acceptance import CriterionResult, verify_report
from src.fields import ScalarField
from src.problems import Prototype, builtin_grid, closed_form_field
from src.report_validator import validate_and_report, validate_report, validate_report_file
from src.serialization import write_json
from src.solvers import SolveResult


def _solve_doc() -> dict:
    grid = builtin_grid("signorini-stationary", 17, 5)
    u = closed_form_field("signorini-stationary", grid)
    return SolveResult.from_fields(u, ScalarField(grid, np.zeros(grid.shape)), Prototype.SIGNORINI, "s").to_dict()


def test_solve_result_document_passes():
    result = validate_report(_solve_doc(), expected_schema="solve_result.v1")
    assert result.success
    assert result.schema_version == "solve_result.v1"
    assert result.missing_keys == []


def test_verify_document_passes(tmp_path):
    doc = verify_report([CriterionResult("INVARIANT_SUITES", True, "ok")])
    path = write_json(tmp_path / "verify.json", doc)
    assert validate_report_file(path).success


def test_missing_key_reported():
    doc = _solve_doc()
    del doc["per_step"]
    result = validate_report(doc)
    assert not result.success
    assert result.missing_keys == ["per_step"]


def test_schema_problems_reported():
    assert validate_report({"x": 1}).errors == ["Missing schema_version"]
    assert "Unknown schema_version" in validate_report({"schema_version": "other.v9"}).errors[0]
    mismatch = validate_report(_solve_doc(), expected_schema="sweep_table.v1")
    assert "expected 'sweep_table.v1'" in mismatch.errors[0]
    assert not validate_report([1, 2]).success


def test_file_errors(tmp_path):
    missing = validate_report_file(tmp_path / "nope.json")
    assert not missing.success and "File not found" in missing.errors[0]

    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": ')
    decoded = validate_report_file(bad)
    assert not decoded.success and "JSON decode error" in decoded.errors[0]


def test_validate_and_report_prints_banner(tmp_path, capsys):
    path = tmp_path / "run_meta.json"
    path.write_text(json.dumps({"schema_version": "run_meta.v1", "command": "verify"}))
    result = validate_and_report(path)
    out = capsys.readouterr().out

    assert not result.success
    assert "REPORT VALIDATION" in out
    assert "Validation: FAILED" in out
