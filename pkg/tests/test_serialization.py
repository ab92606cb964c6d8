"""
Tests for artifact serialization

Validates:
- JSON reports are sorted, indented and free of NaN/Inf
- Field containers keep values, label and lattice
- Field CSV layout
- Atomic writes leave no temporary files behind
"""
import json

import numpy as np

from src.fields import ScalarField
from src.grid import make_grid
from src.problems import Prototype
from src.serialization import (
    dumps_report,
    field_csv_rows,
    load_field,
    read_grid,
    read_json,
    save_field,
    to_jsonable,
    write_csv,
    write_grid,
    write_json,
)


def test_to_jsonable_unwraps_numpy_and_enums():
    out = to_jsonable({
        "a": np.float64(1.5),
        "b": np.int32(3),
        "c": np.array([1.0, np.nan]),
        "d": (np.bool_(True), float("inf")),
        "e": Prototype.SIGNORINI,
    })
    assert out == {"a": 1.5, "b": 3, "c": [1.0, None], "d": [True, None], "e": "signorini"}


def test_report_text_is_stable():
    text = dumps_report({"b": 1, "a": float("nan")})
    assert text == '{\n  "a": null,\n  "b": 1\n}\n'


def test_write_json_roundtrip(tmp_path):
    path = write_json(tmp_path / "nested" / "report.json", {"schema_version": "x.v1", "value": [0.25]})
    assert read_json(path) == {"schema_version": "x.v1", "value": [0.25]}
    assert sorted(p.name for p in path.parent.iterdir()) == ["report.json"]


def test_field_container_roundtrip(tmp_path):
    grid = make_grid(2, "half_box_with_gamma", 9, 4, [[-1.0, 1.0], [0.0, 1.0]], 0.3)
    values = np.random.default_rng(3).normal(size=grid.shape)
    path = save_field(tmp_path / "u.npz", ScalarField(grid, values, "u"))

    loaded = load_field(path)
    assert loaded.label == "u"
    np.testing.assert_array_equal(loaded.values, values)
    assert loaded.grid.shape == grid.shape
    assert loaded.grid.geometry == grid.geometry
    assert np.isclose(loaded.grid.dt, grid.dt)


def test_grid_document(tmp_path):
    grid = make_grid(1, "periodic_line", 16, 5, [0.0, 2.0 * np.pi], 0.1)
    path = write_grid(tmp_path / "grid.json", grid)

    doc = json.loads(path.read_text())
    assert doc["schema_version"] == "grid.v1"
    assert doc["geometry"] == "periodic_line"
    restored = read_grid(path)
    assert restored.shape == grid.shape
    assert np.isclose(restored.h, grid.h)


def test_field_csv_layout():
    grid = make_grid(2, "box", 3, 3, [0.0, 1.0], 1.0)
    field = ScalarField.from_function(grid, lambda t, x1, x2: t + 10 * x1 + 100 * x2)
    rows = field_csv_rows(field)

    assert rows[0] == ["t", "x1", "x2", "value"]
    assert len(rows) == 1 + 27
    for t, x1, x2, value in rows[1:]:
        assert value == t + 10 * x1 + 100 * x2


def test_write_csv_blanks_none(tmp_path):
    path = write_csv(tmp_path / "table.csv", [["r", "value"], [0.5, None], [1.0, 2.0]])
    assert path.read_text() == "r,value\n0.5,\n1.0,2.0\n"
