"""
Artifact serialization.

- JSON reports: sorted keys, indent 2, non-finite numbers written as null
- Fields: .npz container (values, label, grid_json) and CSV (t, x1[, x2], value)
- Every write goes to a temporary file in the target directory, then os.replace
"""
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Union

import numpy as np

from src.fields import ScalarField
from src.grid import Grid

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; NaN / Inf become None, numpy scalars and arrays are unwrapped."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def dumps_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: PathLike, report: dict) -> Path:
    return _atomic_write_bytes(path, dumps_report(report).encode("utf-8"))


def read_json(path: PathLike) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def write_csv(path: PathLike, rows: Iterable[Iterable[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow(["" if v is None else to_jsonable(v) for v in row])
    return _atomic_write_bytes(path, buffer.getvalue().encode("utf-8"))


def write_grid(path: PathLike, grid: Grid) -> Path:
    return write_json(path, grid.to_dict())


def read_grid(path: PathLike) -> Grid:
    return Grid.from_dict(read_json(path))


def save_field(path: PathLike, field: ScalarField) -> Path:
    """Self-describing .npz container."""
    buffer = io.BytesIO()
    np.savez(
        buffer,
        values=field.values,
        label=np.array(field.label),
        grid_json=np.array(json.dumps(field.grid.to_dict(), sort_keys=True)),
    )
    return _atomic_write_bytes(path, buffer.getvalue())


def load_field(path: PathLike) -> ScalarField:
    with np.load(path, allow_pickle=False) as data:
        grid = Grid.from_dict(json.loads(str(data["grid_json"])))
        return ScalarField(grid, data["values"], str(data["label"]))


def field_csv_rows(field: ScalarField) -> list[list]:
    """Header plus one row per node: t, x1[, x2], value."""
    grid = field.grid
    coords = grid.space_time_mesh()
    header = ["t"] + [f"x{i + 1}" for i in range(grid.dim)] + ["value"]
    columns = [c.ravel() for c in coords] + [field.values.ravel()]
    return [header] + np.column_stack(columns).tolist()


def save_field_csv(path: PathLike, field: ScalarField) -> Path:
    return write_csv(path, field_csv_rows(field))
