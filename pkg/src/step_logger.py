"""
Step Logger - per-step solver diagnostics

CSV append-only writer with:
- One row per accepted time step: level,t,newton_iters,residual,complementarity_defect,min_gap
- Crash-tolerant (flush + fsync per row; readable except possibly a truncated last line)
- Header written only when the file is new or empty
"""
import csv
import os
from pathlib import Path

from src.solvers import StepRecord

STEP_COLUMNS = ("level", "t", "newton_iters", "residual", "complementarity_defect", "min_gap")


class StepLogger:
    """
    Append-only CSV sink for StepRecord rows.

    Usage:
        step_logger = StepLogger(log_dir="./runs/thick-active")
        march(spec, step_logger=step_logger)
        step_logger.close()
    """

    def __init__(self, log_dir: str = "./runs", filename: str = "steps.csv"):
        self._file = None
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.log_dir / filename
        self.rows_written = 0

        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._file = open(self.path, "a", encoding="utf-8", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        if fresh:
            self._write_row(STEP_COLUMNS)

    def log(self, record: StepRecord) -> None:
        """Append one record and sync it to disk."""
        if self._file is None:
            raise RuntimeError(f"StepLogger for {self.path} is closed")
        self._write_row([repr(float(v)) if isinstance(v, float) else v for v in (
            record.level,
            record.t,
            record.newton_iters,
            record.residual,
            record.complementarity_defect,
            record.min_gap,
        )])
        self.rows_written += 1

    def _write_row(self, row) -> None:
        self._writer.writerow(row)
        self._file.flush()
        os.fsync(self._file.fileno())

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __enter__(self) -> "StepLogger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        if getattr(self, "_file", None) is not None:
            self.close()


def read_steps(path) -> list[dict]:
    """Parse a steps.csv back into dicts, skipping a truncated final line."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for raw in reader:
            if None in raw.values() or len(raw) != len(STEP_COLUMNS):
                break
            try:
                rows.append({
                    "level": int(raw["level"]),
                    "t": float(raw["t"]),
                    "newton_iters": int(raw["newton_iters"]),
                    "residual": float(raw["residual"]),
                    "complementarity_defect": float(raw["complementarity_defect"]),
                    "min_gap": float(raw["min_gap"]),
                })
            except ValueError:
                break
    return rows
