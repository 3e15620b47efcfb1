"""Simulator and verification harness for chemotaxis with singular
sensitivity and logistic source."""

from .errors import ChemotaxisError
from .grid_ops import Field, Grid, State
from .integrator import RunStatus, StepControl, Trajectory, simulate, step
from .model_core import Params, check_boundedness_conditions, lyapunov_constants

__version__ = "0.2.0"

__all__ = [
    'ChemotaxisError', 'Field', 'Grid', 'Params', 'RunStatus', 'State',
    'StepControl', 'Trajectory', 'check_boundedness_conditions',
    'lyapunov_constants', 'simulate', 'step',
]
