"""Cell-centered grids with homogeneous Neumann boundaries and the spatial
operators of the chemotaxis system.

Fields hold cell averages. Neumann conditions are imposed by ghost cells that
copy the adjacent interior value, which is the same as a zero flux through
every boundary face, so all divergence sums telescope to zero.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
import pandas as pd

from .errors import DomainError, EvaluationError, SingularityError
from .model_core import Params

logger = logging.getLogger(__name__)

MIN_CELLS = 4


###############################################################################
#  GRID, FIELD, STATE
###############################################################################

@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, Lx] or [0, Lx] x [0, Ly]."""
    extents: Tuple[float, ...]
    cells: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'extents', tuple(float(e) for e in self.extents))
        object.__setattr__(self, 'cells', tuple(int(c) for c in self.cells))
        if len(self.cells) not in (1, 2):
            raise DomainError(f'only 1D and 2D grids are simulated, got {len(self.cells)} axes')
        if len(self.extents) != len(self.cells):
            raise DomainError('extents and cells must have the same length')
        if any(c < MIN_CELLS for c in self.cells):
            raise DomainError(f'need at least {MIN_CELLS} cells per axis, got {self.cells}')
        if any(not (e > 0 and math.isfinite(e)) for e in self.extents):
            raise DomainError(f'extents must be positive, got {self.extents}')

    @classmethod
    def interval(cls, length: float, cells: int) -> 'Grid':
        return cls((length,), (cells,))

    @classmethod
    def rectangle(cls, lx: float, ly: float, nx: int, ny: int) -> 'Grid':
        return cls((lx, ly), (nx, ny))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return math.prod(self.cells)

    @property
    def h(self) -> Tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extents, self.cells))

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    @property
    def measure(self) -> float:
        return math.prod(self.extents)

    def centers(self):
        return tuple((np.arange(c) + 0.5) * h for c, h in zip(self.cells, self.h))

    def mesh(self):
        return np.meshgrid(*self.centers(), indexing='ij')

    def refined(self, factor: int = 2) -> 'Grid':
        return Grid(self.extents, tuple(c * factor for c in self.cells))


@dataclass(eq=False)
class Field:
    """Cell averages of one scalar quantity on a grid."""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise DomainError(f'field shape {self.values.shape} != grid shape {self.grid.shape}')
        if not np.all(np.isfinite(self.values)):
            raise DomainError('field values must be finite')

    @classmethod
    def constant(cls, grid: Grid, value: float) -> 'Field':
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable) -> 'Field':
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape).copy())

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def total(self) -> float:
        return float(self.values.sum()) * self.grid.cell_volume

    def copy(self) -> 'Field':
        return Field(self.grid, self.values.copy())

    def to_frame(self) -> pd.DataFrame:
        """One row per cell: flat index, center coordinates and value."""
        columns = {'index': np.arange(self.grid.size)}
        for name, coord in zip(('x', 'y'), self.grid.mesh()):
            columns[name] = coord.ravel()
        columns['value'] = self.values.ravel()
        return pd.DataFrame(columns)


@dataclass(eq=False)
class State:
    """(u, v) at time t. u >= 0 and v > 0 are enforced by the integrator."""
    t: float
    u: Field
    v: Field

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise DomainError('u and v must live on the same grid')
        if self.t < 0:
            raise DomainError(f't must be >= 0, got {self.t}')

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def copy(self) -> 'State':
        return State(self.t, self.u.copy(), self.v.copy())


###############################################################################
#  OPERATORS
###############################################################################

def _axis_slice(ndim, axis, s):
    index = [slice(None)] * ndim
    index[axis] = s
    return tuple(index)


def _face_divergence(flux, axis, h):
    # Boundary faces carry zero flux (homogeneous Neumann)
    pad = [(0, 0)] * flux.ndim
    pad[axis] = (1, 1)
    return np.diff(np.pad(flux, pad), axis=axis) / h


def _arithmetic_mean(left, right):
    return 0.5 * (left + right)


def _harmonic_mean(left, right):
    total = left + right
    return np.divide(2 * left * right, total,
                     out=np.zeros_like(total), where=total != 0)


# Interface averaging of u and v inside the transport flux.
INTERFACE_MEANS: Dict[str, Callable] = {
    'arithmetic': _arithmetic_mean,
    'harmonic': _harmonic_mean,
}


def laplacian_array(f: np.ndarray, h: Tuple[float, ...]) -> np.ndarray:
    out = np.zeros_like(f)
    for axis, hx in enumerate(h):
        pad = [(0, 0)] * f.ndim
        pad[axis] = (1, 1)
        g = np.pad(f, pad, mode='edge')
        out += (g[_axis_slice(f.ndim, axis, slice(2, None))]
                - 2 * f
                + g[_axis_slice(f.ndim, axis, slice(None, -2))]) / hx ** 2
    return out


def chemotactic_divergence_array(u: np.ndarray, v: np.ndarray, chi: float,
                                 h: Tuple[float, ...],
                                 interface_mean: str = 'arithmetic') -> np.ndarray:
    vmin = float(v.min())
    if not vmin > 0:
        raise SingularityError(f'min(v) = {vmin:.3g} <= 0 in chi u/v grad v')
    mean = INTERFACE_MEANS[interface_mean]
    out = np.zeros_like(u)
    for axis, hx in enumerate(h):
        lo = _axis_slice(u.ndim, axis, slice(None, -1))
        hi = _axis_slice(u.ndim, axis, slice(1, None))
        flux = chi * (mean(u[lo], u[hi]) / mean(v[lo], v[hi])) * (v[hi] - v[lo]) / hx
        out += _face_divergence(flux, axis, hx)
    return out


def rhs_arrays(u: np.ndarray, v: np.ndarray, params: Params,
               h: Tuple[float, ...], interface_mean: str = 'arithmetic'):
    du = (laplacian_array(u, h)
          - chemotactic_divergence_array(u, v, params.chi, h, interface_mean)
          + params.a * u - params.mu * u ** 2)
    dv = laplacian_array(v, h) - v + u
    return du, dv


def laplacian(f: Field) -> Field:
    """Second-order 3-point (1D) / 5-point (2D) Laplacian with Neumann ghosts."""
    return Field(f.grid, laplacian_array(f.values, f.grid.h))


def chemotactic_divergence(u: Field, v: Field, chi: float,
                           interface_mean: str = 'arithmetic') -> Field:
    """Discrete divergence of chi (u/v) grad v in conservative form.

    The flux through the face between two cells is chi * (u_f / v_f) * dv/h,
    where u_f and v_f are interface means of the two neighbours (arithmetic by
    default, see INTERFACE_MEANS). Boundary faces carry no flux.

    Raises:
        SingularityError: min(v) <= 0.
    """
    return Field(u.grid, chemotactic_divergence_array(
        u.values, v.values, chi, u.grid.h, interface_mean))


def rhs(state: State, params: Params, interface_mean: str = 'arithmetic'):
    """Time derivatives (du/dt, dv/dt) of the semi-discrete system.

    du/dt = lap u - div(chi u/v grad v) + a u - mu u^2 and
    dv/dt = lap v - v + u, cellwise.
    """
    du, dv = rhs_arrays(state.u.values, state.v.values, params,
                        state.grid.h, interface_mean)
    return Field(state.grid, du), Field(state.grid, dv)


###############################################################################
#  QUADRATURE
###############################################################################

def integrate_array(values: np.ndarray, grid: Grid) -> float:
    return float(values.sum()) * grid.cell_volume


def integrate_cellwise(*terms) -> float:
    """Midpoint quadrature of a product of cellwise powers.

    Each term is a Field or a (Field, exponent) pair; the integrand is the
    product of all terms, evaluated per cell and summed times the cell volume.
    Callers check positivity before using negative exponents or logs.

    Raises:
        EvaluationError: The integrand is not finite in some cell.
    """
    if not terms:
        raise DomainError('integrate_cellwise needs at least one term')
    grid = None
    integrand = None
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        for term in terms:
            f, exponent = term if isinstance(term, tuple) else (term, 1.0)
            if grid is None:
                grid = f.grid
            elif f.grid != grid:
                raise DomainError('all terms must share one grid')
            part = f.values if exponent == 1.0 else np.power(f.values, exponent)
            integrand = part if integrand is None else integrand * part
    if not np.all(np.isfinite(integrand)):
        raise EvaluationError('integrand is not finite in every cell')
    return integrate_array(integrand, grid)
