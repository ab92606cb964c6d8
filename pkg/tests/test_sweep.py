"""
Tests for the penalty-parameter sweep
"""
import pytest

from src.errors import ConfigInvalid
from src.problems import build_builtin
from src.solvers import march
from src.sweep import eps_sweep, validate_eps_list


@pytest.mark.parametrize(
    "eps_list",
    [
        (1e-1, 1e-2),
        (1e-1, 1e-1, 1e-2),
        (1e-3, 1e-2, 1e-1),
        (1e-1, 0.0, -1e-3),
        (1e-1, float("nan"), 1e-3),
    ],
)
def test_invalid_eps_lists(eps_list):
    with pytest.raises(ConfigInvalid) as excinfo:
        validate_eps_list(eps_list)
    assert excinfo.value.path == "eps_list"


def test_valid_eps_list():
    assert validate_eps_list([0.1, 0.01, 0.001, 1e-4]) == [0.1, 0.01, 0.001, 1e-4]


def test_thick_sweep_against_oracle():
    spec, grid = build_builtin("thick-active", n_space=65, n_time=17)
    table = eps_sweep(spec, grid, (1e-1, 1e-2, 1e-3))

    assert table.reference == "oracle"
    assert table.column("eps") == [1e-1, 1e-2, 1e-3]
    assert table.errors_strictly_decreasing()
    assert table.rows[-1].error < 1e-2


@pytest.mark.timeout(300)
def test_sweep_rows_independent_of_jobs():
    spec, grid = build_builtin("thick-active", n_space=33, n_time=9)
    serial = eps_sweep(spec, grid, (1e-1, 1e-2, 1e-3), jobs=1)
    parallel = eps_sweep(spec, grid, (1e-1, 1e-2, 1e-3), jobs=3)

    assert serial.to_dict() == parallel.to_dict()


def test_dynamic_sweep_uses_finest_run():
    spec, grid = build_builtin("dynamic-caloric", n_space=9, n_time=5)
    table = eps_sweep(spec, grid, (1e-1, 1e-2, 1e-3))

    assert table.reference == "finest_eps"
    assert table.rows[-1].error == 0.0


def test_provided_reference_and_modulus_columns():
    spec, grid = build_builtin("thick-active", n_space=33, n_time=17)
    reference = march(spec.with_eps(1e-4), grid)
    radii = [2 * grid.h, 3 * grid.h, 4 * grid.h, 6 * grid.h]
    table = eps_sweep(spec, grid, (1e-1, 1e-2, 1e-3), reference=reference, modulus_radii=radii)

    assert table.reference == "provided"
    assert len(table.rows[0].modulus_table) == 4
    rows = table.csv_rows()
    assert rows[0][0] == "eps" and rows[0][-1] == "holder_exponent"
    assert len(rows) == 4
    assert table.to_dict()["schema_version"] == "sweep_table.v1"
