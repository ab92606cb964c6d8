"""
Tests for the space-time lattice

Validates:
- Spacing and shapes for each geometry
- Dirichlet / contact-line masks
- Rejection of degenerate or inconsistent grids
- grid.v1 dictionary form
"""
import numpy as np
import pytest

from src.errors import DegenerateGrid, InvalidGeometry
from src.grid import Geometry, Grid, make_grid


def test_box_line_spacing_and_shape():
    """Test h = L / (n - 1) and dt = T / (n_time - 1) on a bounded line."""
    grid = make_grid(1, "box", 65, 101, [0.0, 1.0], 0.1)

    assert grid.h == pytest.approx(1.0 / 64)
    assert grid.dt == pytest.approx(1e-3)
    assert grid.shape == (101, 65)
    assert grid.horizon == pytest.approx(0.1)
    assert grid.axes[0][-1] == pytest.approx(1.0)
    assert grid.times[-1] == pytest.approx(0.1)


def test_half_box_masks():
    """Test the contact line x2 = 0 carries no lateral data except at its corners."""
    grid = make_grid(2, Geometry.HALF_BOX, 65, 33, [[-1.0, 1.0], [0.0, 1.0]], 0.25)

    assert grid.space_shape == (65, 33)
    dirichlet = grid.dirichlet_mask()
    gamma = grid.gamma_mask()

    assert dirichlet[0, 0] and dirichlet[-1, 0]
    assert not dirichlet[1:-1, 0].any()
    assert dirichlet[:, -1].all()
    assert gamma[1:-1, 0].all()
    assert not (gamma & dirichlet).any()
    assert gamma.sum() == 63


def test_box_2d_has_full_boundary():
    grid = make_grid(2, "box", 17, 9, [0.0, 1.0], 0.1)
    mask = grid.dirichlet_mask()

    assert mask[:, 0].all() and mask[:, -1].all()
    assert mask[0, :].all() and mask[-1, :].all()
    assert not mask[1:-1, 1:-1].any()
    assert not grid.gamma_mask().any()


def test_periodic_line_spacing_and_no_boundary():
    """Test h = L / n on the periodic line and no Dirichlet nodes."""
    grid = make_grid(1, "periodic_line", 128, 65, [0.0, 2 * np.pi], 0.1)

    assert grid.periodic
    assert grid.h == pytest.approx(2 * np.pi / 128)
    assert not grid.dirichlet_mask().any()


@pytest.mark.parametrize(
    "kwargs, error",
    [
        (dict(dim=1, geometry="half_box_with_gamma", extent=[0.0, 1.0]), InvalidGeometry),
        (dict(dim=2, geometry="periodic_line", extent=[0.0, 1.0]), InvalidGeometry),
        (dict(dim=3, geometry="box", extent=[0.0, 1.0]), InvalidGeometry),
        (dict(dim=1, geometry="torus", extent=[0.0, 1.0]), InvalidGeometry),
        (dict(dim=2, geometry="box", extent=[[0.0, 1.0], [0.0, 0.3]]), InvalidGeometry),
        (dict(dim=2, geometry="half_box_with_gamma", extent=[[-1.0, 1.0], [-1.0, 1.0]]), InvalidGeometry),
        (dict(dim=1, geometry="box", extent=[1.0, 0.0]), DegenerateGrid),
    ],
)
def test_invalid_grids_rejected(kwargs, error):
    with pytest.raises(error):
        make_grid(n_space=5, n_time=5, T=0.1, **kwargs)


def test_degenerate_counts_rejected():
    with pytest.raises(DegenerateGrid):
        make_grid(1, "box", 2, 5, [0.0, 1.0], 0.1)
    with pytest.raises(DegenerateGrid):
        make_grid(1, "box", 5, 2, [0.0, 1.0], 0.1)
    with pytest.raises(DegenerateGrid):
        make_grid(1, "box", 5, 5, [0.0, 1.0], 0.0)


def test_grid_errors_are_value_errors():
    with pytest.raises(ValueError):
        make_grid(1, "box", 2, 5, [0.0, 1.0], 0.1)


def test_level_of():
    grid = make_grid(1, "box", 65, 101, [0.0, 1.0], 0.1)

    assert grid.level_of(0.05) == 50
    assert grid.level_of(0.0) == 0
    with pytest.raises(ValueError):
        grid.level_of(0.0505)
    with pytest.raises(ValueError):
        grid.level_of(0.2)


def test_space_time_mesh_ordering():
    """Test coordinate arrays are ordered (t, x1, x2)."""
    grid = make_grid(2, "box", 5, 3, [0.0, 1.0], 0.2)
    t, x1, x2 = grid.space_time_mesh()

    assert t.shape == grid.shape
    assert t[2, 0, 0] == pytest.approx(0.2)
    assert x1[0, 4, 0] == pytest.approx(1.0)
    assert x2[0, 0, 4] == pytest.approx(1.0)


def test_to_dict_schema_and_rebuild():
    grid = make_grid(2, "half_box_with_gamma", 17, 9, [[-1.0, 1.0], [0.0, 1.0]], 0.25, t0=0.5)
    data = grid.to_dict()

    assert data["schema_version"] == "grid.v1"
    assert data["geometry"] == "half_box_with_gamma"

    rebuilt = Grid.from_dict(data)
    assert rebuilt.shape == grid.shape
    assert rebuilt.h == pytest.approx(grid.h)
    assert rebuilt.dt == pytest.approx(grid.dt)
    assert rebuilt.t0 == pytest.approx(0.5)
