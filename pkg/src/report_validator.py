"""
Report Validator

Re-reads a JSON report written by the CLI and checks:
- The file parses as one JSON document
- schema_version is one of the known report schemas
- Every mandatory key of that schema is present

Usage:
    from src.report_validator import validate_report_file

    result = validate_report_file("runs/thick-active/report.json")
    print(f"Schema: {result.schema_version}")
    print(f"Missing: {result.missing_keys}")
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from src.report import MANDATORY_KEYS as REGULARITY_KEYS

REQUIRED_KEYS: dict[str, tuple[str, ...]] = {
    "solve_result.v1": ("name", "prototype", "eps_used", "grid", "summary", "per_step"),
    "sweep_table.v1": ("name", "prototype", "reference", "rows"),
    "regularity_report.v1": ("name", "prototype") + tuple(REGULARITY_KEYS),
    "verify_report.v1": ("criteria", "passed"),
    "run_meta.v1": ("command", "argv", "started_at", "finished_at", "version", "exit_status"),
}


@dataclass
class ValidationResult:
    """Result of report validation."""
    schema_version: Optional[str]
    key_count: int
    missing_keys: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    success: bool = False


def validate_report(report: dict, expected_schema: Optional[str] = None) -> ValidationResult:
    """Check schema_version and mandatory keys of an already-parsed report."""
    if not isinstance(report, dict):
        return ValidationResult(None, 0, errors=["Report is not a JSON object"])

    schema = report.get("schema_version")
    errors = []
    missing: list[str] = []
    if schema is None:
        errors.append("Missing schema_version")
    elif schema not in REQUIRED_KEYS:
        errors.append(f"Unknown schema_version '{schema}' (known: {', '.join(sorted(REQUIRED_KEYS))})")
    elif expected_schema is not None and schema != expected_schema:
        errors.append(f"Invalid schema_version '{schema}' (expected '{expected_schema}')")
    else:
        missing = [key for key in REQUIRED_KEYS[schema] if key not in report]
        if missing:
            errors.append(f"Missing required fields: {missing}")

    return ValidationResult(
        schema_version=schema,
        key_count=len(report),
        missing_keys=missing,
        errors=errors,
        success=not errors,
    )


def validate_report_file(filepath: str | Path, expected_schema: Optional[str] = None) -> ValidationResult:
    """
    Validate one JSON report file.

    Args:
        filepath: Path to the report
        expected_schema: Require this schema_version (any known schema when None)

    Returns:
        ValidationResult with the detected schema and error details
    """
    filepath = Path(filepath)
    if not filepath.exists():
        return ValidationResult(None, 0, errors=[f"File not found: {filepath}"])

    try:
        with open(filepath, "r", encoding="utf-8") as f:
            report = json.load(f)
    except json.JSONDecodeError as e:
        return ValidationResult(None, 0, errors=[f"JSON decode error: {e}"])

    return validate_report(report, expected_schema)


def validate_and_report(filepath: str | Path, expected_schema: Optional[str] = None) -> ValidationResult:
    """Validate and print a report to stdout."""
    result = validate_report_file(filepath, expected_schema)

    print("\n" + "=" * 80)
    print("REPORT VALIDATION")
    print("=" * 80)
    print(f"File: {filepath}")
    print(f"Schema: {result.schema_version}")
    print(f"Top-level keys: {result.key_count}")

    if result.errors:
        print(f"\nErrors: {len(result.errors)}")
        for error in result.errors:
            print(f"  - {error}")

    print(f"\nValidation: {'PASSED' if result.success else 'FAILED'}")
    print("=" * 80 + "\n")
    return result


if __name__ == "__main__":
    import sys

    if len(sys.argv) < 2:
        print("Usage: python -m src.report_validator <filepath> [schema_version]")
        sys.exit(1)

    outcome = validate_and_report(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else None)
    sys.exit(0 if outcome.success else 1)
