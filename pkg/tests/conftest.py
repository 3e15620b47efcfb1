"""
Pytest configuration file containing shared fixtures.
"""

import math

import pytest

from singular_chemotaxis.config import config_from_dict
from singular_chemotaxis.diagnostics import DiagnosticsRecord
from singular_chemotaxis.grid_ops import Field, Grid, State
from singular_chemotaxis.model_core import Params

# Parameters used across the suite
A, MU, CHI = 1.0, 2.0, 0.5
STEADY = A / MU


def make_record(t=0.0, **values):
    """A DiagnosticsRecord with every column zero unless given."""
    fields = {name: 0.0 for name in DiagnosticsRecord.__dataclass_fields__}
    fields['G'] = math.nan
    fields.update(values, t=t)
    return DiagnosticsRecord(**fields)


@pytest.fixture
def params():
    return Params(A, MU, CHI)


@pytest.fixture
def grid():
    return Grid.interval(10.0, 16)


@pytest.fixture
def steady_state(grid):
    return State(0.0, Field.constant(grid, STEADY), Field.constant(grid, STEADY))


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture
def homogeneous_config(tmp_path):
    """Constant data u0 = v0 = 0.2 on a small grid, horizon 1."""
    return config_from_dict({
        'mode': 'simulate',
        'model': {'a': A, 'mu': MU, 'chi': CHI, 'dim': 1},
        'grid': {'extents': [1.0], 'cells': [4]},
        'step': {'dt_init': 1e-3, 'dt_min': 1e-12, 'fixed_step': True},
        'run': {'horizon': 1.0, 'sample_every': 0.1, 'stop_on_convergence': False},
        'initial': {'u': {'generator': 'constant', 'value': 0.2},
                    'v': {'generator': 'constant', 'value': 0.2}},
        'output': {'directory': str(tmp_path / 'out')},
    })
