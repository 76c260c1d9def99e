import numpy as np
import pytest

from kleinsim.kernel.grid import Grid, GridError
from kleinsim.kernel.parameters import PARAMETERS


def test_default_grid():

    grid = Grid()

    assert grid.n_points == PARAMETERS['grid points']
    assert grid.x_min == PARAMETERS['x min']
    assert grid.x_max == PARAMETERS['x max']
    assert grid.dx == pytest.approx(128.0/2048)
    assert grid.extent == pytest.approx(128.0)


@pytest.mark.parametrize('n_points', [8, 100, 1000])
def test_invalid_number_of_points(n_points):

    with pytest.raises(GridError):
        Grid(n_points, -8.0, 8.0)


def test_invalid_bounds():

    with pytest.raises(GridError):
        Grid(64, 8.0, -8.0)


def test_axes_are_read_only(small_grid):

    with pytest.raises(AttributeError):
        small_grid.dx = 1.0

    with pytest.raises(ValueError):
        small_grid.x[0] = 1.0

    with pytest.raises(ValueError):
        small_grid.p[0] = 1.0


def test_momentum_axis(small_grid):

    assert np.max(np.abs(small_grid.p)) == pytest.approx(np.pi/small_grid.dx)
    assert small_grid.dp == pytest.approx(2.0*np.pi/small_grid.extent)
    assert small_grid.p[1] == pytest.approx(small_grid.dp)


def test_integrate(small_grid):

    gaussian = np.exp(-small_grid.x**2/2.0)/np.sqrt(2.0*np.pi)

    assert small_grid.integrate(gaussian) == pytest.approx(1.0, abs=1.0e-12)


def test_boundary_mask():

    grid = Grid(256, -16.0, 16.0)
    mask = grid.boundary_mask()

    assert mask.sum() == 16
    assert mask[:8].all() and mask[-8:].all()
    assert not mask[8:-8].any()


def test_equality():

    assert Grid(64, -8.0, 8.0) == Grid(64, -8, 8)
    assert hash(Grid(64, -8.0, 8.0)) == hash(Grid(64, -8.0, 8.0))
    assert Grid(64, -8.0, 8.0) != Grid(128, -8.0, 8.0)
