"""Explicit RK4 time stepping of the semi-discrete system.

Positivity is enforced by rejecting steps, never by clamping: a candidate is
accepted only if u >= 0, v >= v_floor, u <= u_cap and every value is finite.
Adaptive runs halve dt on rejection and grow it by 1.25 after 20 accepted
steps in a row, always capped by the diffusion bound safety*cfl_diff*h_min**2.
The whole loop is deterministic for given inputs.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord, DiagnosticsSpec, record_state
from .errors import AdmissibilityError, DomainError, SingularityError, StepRejected
from .grid_ops import Field, Grid, State, rhs_arrays
from .model_core import Params

logger = logging.getLogger(__name__)

CONVERGENCE_WINDOW = 5
SAMPLE_RTOL = 1e-9


class RunStatus(str, Enum):
    COMPLETED_HORIZON = 'CompletedHorizon'
    CONVERGED_EARLY = 'ConvergedEarly'
    V_FLOOR_HIT = 'VFloorHit'
    BLOW_UP_SUSPECTED = 'BlowUpSuspected'
    STEP_UNDERFLOW = 'StepUnderflow'

    @property
    def success(self) -> bool:
        return self in (RunStatus.COMPLETED_HORIZON, RunStatus.CONVERGED_EARLY)


class Guard(Enum):
    NEGATIVE_U = 'negative-u'
    V_FLOOR = 'v-floor'
    U_CAP = 'u-cap'
    NONFINITE = 'nonfinite'


# Terminal status when a guard keeps failing
GUARD_STATUS = {
    Guard.V_FLOOR: RunStatus.V_FLOOR_HIT,
    Guard.U_CAP: RunStatus.BLOW_UP_SUSPECTED,
    Guard.NONFINITE: RunStatus.BLOW_UP_SUSPECTED,
    Guard.NEGATIVE_U: RunStatus.STEP_UNDERFLOW,
}


@dataclass(frozen=True)
class StepControl:
    dt_init: float = 1e-2
    dt_min: float = 1e-10
    safety: float = 0.9
    cfl_diff: float = 0.2
    v_floor: float = 1e-10
    u_cap: float = 1e6
    fixed_step: bool = False
    grow_after: int = 20
    grow_factor: float = 1.25

    def __post_init__(self):
        if not 0 < self.dt_min < self.dt_init:
            raise DomainError(f'need 0 < dt_min < dt_init, got {self.dt_min}, {self.dt_init}')
        if not 0 < self.safety <= 1:
            raise DomainError(f'safety must lie in (0, 1], got {self.safety}')
        if not 0 < self.cfl_diff <= 0.25:
            raise DomainError(f'cfl_diff must lie in (0, 0.25], got {self.cfl_diff}')
        if not (self.v_floor > 0 and self.u_cap > 0):
            raise DomainError('v_floor and u_cap must be positive')

    def stability_bound(self, grid: Grid) -> float:
        return self.safety * self.cfl_diff * grid.h_min ** 2


@dataclass
class Trajectory:
    params: Params
    grid: Grid
    records: List[DiagnosticsRecord]
    status: RunStatus
    final_state: State
    snapshots: List[State] = field(default_factory=list)
    steps_accepted: int = 0
    steps_rejected: int = 0

    def series(self, name: str):
        return (np.array([r.t for r in self.records]),
                np.array([getattr(r, name) for r in self.records]))


def check_admissible(state: State):
    """u0 >= 0, u0 not identically zero, v0 > 0."""
    if not state.u.min() >= 0:
        raise AdmissibilityError(f'min(u0) = {state.u.min():.3g} < 0')
    if not state.u.max() > 0:
        raise AdmissibilityError('u0 vanishes identically')
    if not state.v.min() > 0:
        raise AdmissibilityError(f'min(v0) = {state.v.min():.3g} <= 0')


def step(state: State, params: Params, ctrl: StepControl, dt: float,
         interface_mean: str = 'arithmetic', rhs_func=rhs_arrays) -> State:
    """Advance one classical RK4 step.

    `rhs_func(u, v, params, h, interface_mean)` returns (du, dv) as arrays.

    Raises:
        DomainError: dt is not positive or exceeds the stability bound.
        StepRejected: The candidate failed a guard; carries the Guard.
    """
    grid = state.grid
    bound = ctrl.stability_bound(grid)
    if not 0 < dt <= bound * (1 + 1e-9):
        raise DomainError(f'dt={dt:.6g} outside (0, {bound:.6g}]')
    h = grid.h
    u, v = state.u.values, state.v.values
    try:
        with np.errstate(over='ignore', invalid='ignore'):
            k1u, k1v = rhs_func(u, v, params, h, interface_mean)
            k2u, k2v = rhs_func(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v,
                                params, h, interface_mean)
            k3u, k3v = rhs_func(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v,
                                params, h, interface_mean)
            k4u, k4v = rhs_func(u + dt * k3u, v + dt * k3v,
                                params, h, interface_mean)
            u_new = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
            v_new = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    except SingularityError as e:
        raise StepRejected(Guard.V_FLOOR, f'stage {e}') from e
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        raise StepRejected(Guard.NONFINITE)
    if u_new.min() < 0:
        raise StepRejected(Guard.NEGATIVE_U, f'min(u)={u_new.min():.3g}')
    if v_new.min() < ctrl.v_floor:
        raise StepRejected(Guard.V_FLOOR, f'min(v)={v_new.min():.3g}')
    if u_new.max() > ctrl.u_cap:
        raise StepRejected(Guard.U_CAP, f'max(u)={u_new.max():.3g}')
    return State(state.t + dt, Field(grid, u_new), Field(grid, v_new))


def detect_convergence(records: Sequence[DiagnosticsRecord], params: Params,
                       tol: float, window: int = CONVERGENCE_WINDOW) -> bool:
    """True when the last `window` samples all have both sup-norm deviations
    from a/mu below tol."""
    if not records:
        raise DomainError('convergence check needs at least one sample')
    tail = records[-window:]
    return len(tail) == window and all(
        r.linf_u_dev < tol and r.linf_v_dev < tol for r in tail)


def sample_time(n: int, sample_every: float, horizon: float) -> float:
    """The n-th sample time, snapped to the horizon when within rounding of it."""
    t = n * sample_every
    if t >= horizon * (1 - SAMPLE_RTOL):
        return horizon
    return t


def simulate(initial: State, params: Params, ctrl: StepControl,
             horizon: float, sample_every: float,
             diag: Optional[DiagnosticsSpec] = None,
             tol: float = 1e-6, stop_on_convergence: bool = True,
             snapshot_every: Optional[float] = None,
             interface_mean: str = 'arithmetic') -> Trajectory:
    """Integrate from `initial` to `horizon`, recording a sample every
    `sample_every` time units.

    Steps are shortened to land exactly on sample times. In fixed-step mode
    (ctrl.fixed_step) dt_init is used unchanged and the first rejection ends
    the run.
    """
    params.require_strict()
    check_admissible(initial)
    if not (horizon > 0 and sample_every > 0):
        raise DomainError('horizon and sample_every must be positive')
    grid = initial.grid
    diag = diag or DiagnosticsSpec.for_params(params)
    bound = ctrl.stability_bound(grid)
    if ctrl.fixed_step:
        if ctrl.dt_init > bound * (1 + 1e-9):
            raise DomainError(f'fixed dt={ctrl.dt_init} exceeds stability bound {bound:.6g}')
        dt = ctrl.dt_init
    else:
        dt = min(ctrl.dt_init, bound)

    logger.info('simulate a=%g mu=%g chi=%g N=%d grid=%s horizon=%g dt=%.3g',
                params.a, params.mu, params.chi, params.dim, grid.cells, horizon, dt)
    state = initial.copy()
    records = [record_state(state, params, diag)]
    snapshots = []
    next_snapshot = 0.0
    if snapshot_every:
        snapshots.append(state.copy())
        next_snapshot = snapshot_every
    accepted = rejected = streak = 0
    status = None
    n_sample = 1
    while status is None:
        t_sample = sample_time(n_sample, sample_every, horizon)
        while state.t < t_sample:
            remaining = t_sample - state.t
            last = dt >= remaining * (1 - 1e-9)
            dt_try = remaining if last else dt
            try:
                candidate = step(state, params, ctrl, dt_try, interface_mean)
            except StepRejected as e:
                rejected += 1
                streak = 0
                logger.debug('t=%.6g dt=%.3g rejected: %s', state.t, dt_try, e)
                if ctrl.fixed_step:
                    status = GUARD_STATUS[e.guard]
                    break
                dt = 0.5 * dt_try
                if dt < ctrl.dt_min:
                    status = GUARD_STATUS[e.guard]
                    logger.info('dt underflow at t=%.6g (%s)', state.t, e.guard.value)
                    break
                continue
            accepted += 1
            state = candidate
            if last:
                state.t = t_sample
            if not ctrl.fixed_step:
                streak += 1
                if streak >= ctrl.grow_after:
                    dt = min(dt * ctrl.grow_factor, bound)
                    streak = 0
        if status is not None:
            if state.t > records[-1].t:
                records.append(record_state(state, params, diag))
            break
        records.append(record_state(state, params, diag))
        if snapshot_every and state.t >= next_snapshot * (1 - 1e-12):
            snapshots.append(state.copy())
            next_snapshot += snapshot_every
        if stop_on_convergence and detect_convergence(records, params, tol):
            status = RunStatus.CONVERGED_EARLY
        elif state.t >= horizon:
            status = RunStatus.COMPLETED_HORIZON
        n_sample += 1

    logger.info('finished at t=%.6g: %s (%d accepted, %d rejected)',
                state.t, status.value, accepted, rejected)
    return Trajectory(params, grid, records, status, state, snapshots,
                      accepted, rejected)
