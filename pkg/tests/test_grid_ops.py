import math

import numpy as np
import pytest

from singular_chemotaxis.errors import DomainError, EvaluationError, SingularityError
from singular_chemotaxis.grid_ops import (Field, Grid, State, chemotactic_divergence,
                                          chemotactic_divergence_array, integrate_cellwise,
                                          laplacian, laplacian_array, rhs)


def test_grid_properties():
    g = Grid.rectangle(2.0, 1.0, 8, 4)
    assert g.dim == 2
    assert g.shape == (8, 4)
    assert g.size == 32
    assert g.h == (0.25, 0.25)
    assert g.cell_volume == pytest.approx(0.0625)
    assert g.measure == pytest.approx(2.0)
    assert g.refined().cells == (16, 8)
    x, y = g.centers()
    assert x[0] == pytest.approx(0.125)
    assert y[-1] == pytest.approx(0.875)


@pytest.mark.parametrize('extents, cells', [
    ((1.0,), (3,)),
    ((1.0, 1.0, 1.0), (4, 4, 4)),
    ((0.0,), (8,)),
    ((1.0,), (8, 8)),
])
def test_grid_validation(extents, cells):
    with pytest.raises(DomainError):
        Grid(extents, cells)


def test_field_rejects_nonfinite(grid):
    values = np.ones(grid.shape)
    values[3] = math.nan
    with pytest.raises(DomainError):
        Field(grid, values)
    with pytest.raises(DomainError):
        Field(grid, np.ones(5))


def test_field_to_frame():
    g = Grid.rectangle(1.0, 1.0, 4, 4)
    frame = Field.constant(g, 2.0).to_frame()
    assert list(frame.columns) == ['index', 'x', 'y', 'value']
    assert len(frame) == 16
    assert (frame['value'] == 2.0).all()
    assert Field.constant(Grid.interval(1.0, 4), 1.0).to_frame().columns.tolist() == \
        ['index', 'x', 'value']


def test_state_needs_one_grid(grid):
    other = Grid.interval(10.0, 32)
    with pytest.raises(DomainError):
        State(0.0, Field.constant(grid, 1.0), Field.constant(other, 1.0))


@pytest.mark.parametrize('shape, h', [((32,), (0.3,)), ((8, 12), (0.5, 0.25))])
def test_divergence_sums_telescope(shape, h):
    """Interior fluxes cancel and boundary fluxes vanish"""
    rng = np.random.default_rng(3)
    u = rng.uniform(0.0, 2.0, shape)
    v = rng.uniform(0.5, 2.0, shape)
    assert abs(laplacian_array(u, h).sum()) < 1e-10
    for mean in ('arithmetic', 'harmonic'):
        assert abs(chemotactic_divergence_array(u, v, 0.7, h, mean).sum()) < 1e-10


def test_laplacian_second_order():
    """Error of the 3-point laplacian on cos(pi x) drops about 4x per refinement"""
    errors = []
    for cells in (16, 32, 64):
        g = Grid.interval(1.0, cells)
        f = Field.from_function(g, lambda x: np.cos(np.pi * x))
        exact = -np.pi ** 2 * np.cos(np.pi * g.centers()[0])
        errors.append(np.abs(laplacian(f).values - exact).max())
    assert errors[0] / errors[1] > 2.0
    assert errors[1] / errors[2] > 2.0


def test_divergence_needs_positive_v(grid):
    v = np.ones(grid.shape)
    v[5] = 0.0
    with pytest.raises(SingularityError):
        chemotactic_divergence(Field.constant(grid, 1.0), Field(grid, v), 0.5)


def test_rhs_vanishes_at_steady_state(steady_state, params):
    du, dv = rhs(steady_state, params)
    assert np.all(du.values == 0.0)
    assert np.all(dv.values == 0.0)


def test_rhs_homogeneous_is_logistic(grid, params):
    state = State(0.0, Field.constant(grid, 0.2), Field.constant(grid, 0.3))
    du, dv = rhs(state, params)
    assert du.values == pytest.approx(0.2 - 2.0 * 0.04)
    assert dv.values == pytest.approx(-0.1)


def test_integrate_cellwise(grid):
    u = Field.constant(grid, 2.0)
    v = Field.constant(grid, 4.0)
    assert integrate_cellwise(u) == pytest.approx(20.0)
    assert integrate_cellwise((u, 2.0), (v, -0.5)) == pytest.approx(20.0)
    with pytest.raises(EvaluationError):
        integrate_cellwise((Field.constant(grid, 0.0), -1.0))
    with pytest.raises(DomainError):
        integrate_cellwise()


def test_laplacian_exact_on_quadratic():
    g = Grid.interval(1.0, 8)
    lap = laplacian(Field.from_function(g, lambda x: x ** 2)).values
    assert lap[1:-1] == pytest.approx(2.0, abs=1e-9)
    # zero-flux ghost at x = 1
    assert lap[-1] == pytest.approx(-14.0)


def test_divergence_four_cell_example():
    """Face fluxes 2/3, 0, -2/3 from u = 1, v = (1, 2, 2, 1), h = 1, chi = 1"""
    g = Grid.interval(4.0, 4)
    div = chemotactic_divergence(Field.constant(g, 1.0),
                                 Field(g, np.array([1.0, 2.0, 2.0, 1.0])), 1.0)
    assert div.values == pytest.approx([2 / 3, -2 / 3, -2 / 3, 2 / 3], abs=1e-15)
    assert div.values.sum() == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize('shape', [(24,), (12, 12)])
def test_rhs_keeps_reflection_symmetry(shape, params):
    """Data symmetric under reflecting every axis gives symmetric derivatives"""
    rng = np.random.default_rng(5)
    flip = tuple(range(len(shape)))
    base_u = rng.uniform(0.2, 1.0, shape)
    base_v = rng.uniform(0.5, 1.5, shape)
    u = base_u + np.flip(base_u, axis=flip)
    v = base_v + np.flip(base_v, axis=flip)
    g = Grid(tuple(6.0 for _ in shape), shape)
    du, dv = rhs(State(0.0, Field(g, u), Field(g, v)), params)
    assert du.values == pytest.approx(np.flip(du.values, axis=flip), abs=1e-12)
    assert dv.values == pytest.approx(np.flip(dv.values, axis=flip), abs=1e-12)


def test_integrate_cellwise_linear_is_exact():
    g = Grid.interval(1.0, 100)
    assert integrate_cellwise(Field.from_function(g, lambda x: x)) == \
        pytest.approx(0.5, abs=1e-14)
