import math

import numpy as np
import pytest

from singular_chemotaxis.diagnostics import check_mass_bound, records_frame
from singular_chemotaxis.errors import AdmissibilityError, DomainError, StepRejected
from singular_chemotaxis.grid_ops import Field, Grid, State, rhs
from singular_chemotaxis.integrator import (Guard, RunStatus, StepControl,
                                            detect_convergence, sample_time,
                                            simulate, step)
from singular_chemotaxis.model_core import Params
from singular_chemotaxis.oracle import logistic_exact


def constant_state(grid, u, v):
    return State(0.0, Field.constant(grid, u), Field.constant(grid, v))


def scalar_rk4(u, v, a, mu, dt):
    def f(u, v):
        return a * u - mu * u ** 2, u - v
    k1 = f(u, v)
    k2 = f(u + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1])
    k3 = f(u + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1])
    k4 = f(u + dt * k3[0], v + dt * k3[1])
    return (u + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            v + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def test_step_control_validation():
    with pytest.raises(DomainError):
        StepControl(dt_init=1e-3, dt_min=1e-2)
    with pytest.raises(DomainError):
        StepControl(cfl_diff=0.3)
    with pytest.raises(DomainError):
        StepControl(v_floor=0.0)


def test_steady_state_step_is_exact(steady_state, params):
    new = step(steady_state, params, StepControl(), 0.05)
    assert np.array_equal(new.u.values, steady_state.u.values)
    assert np.array_equal(new.v.values, steady_state.v.values)
    assert new.t == pytest.approx(0.05)


def test_step_rejects_large_dt(steady_state, params):
    with pytest.raises(DomainError):
        step(steady_state, params, StepControl(), 1.0)
    with pytest.raises(DomainError):
        step(steady_state, params, StepControl(), 0.0)


def test_homogeneous_step_matches_scalar_rk4(grid, params):
    state = constant_state(grid, 0.2, 0.3)
    new = step(state, params, StepControl(), 0.05)
    u, v = scalar_rk4(0.2, 0.3, params.a, params.mu, 0.05)
    assert new.u.values == pytest.approx(u, rel=1e-14)
    assert new.v.values == pytest.approx(v, rel=1e-14)


def test_step_guard_u_cap(grid):
    state = constant_state(grid, 0.4, 0.5)
    with pytest.raises(StepRejected) as e:
        step(state, Params(1.0, 0.5, 0.5), StepControl(u_cap=0.4), 0.05)
    assert e.value.guard is Guard.U_CAP


def test_simulate_steady_state_converges_early(steady_state, params):
    traj = simulate(steady_state, params, StepControl(), horizon=10.0, sample_every=0.5)
    assert traj.status is RunStatus.CONVERGED_EARLY
    assert traj.status.success
    assert traj.final_state.t == pytest.approx(2.0)
    assert len(traj.records) == 5


def test_simulate_runs_to_horizon(steady_state, params):
    traj = simulate(steady_state, params, StepControl(), horizon=1.0,
                    sample_every=0.5, stop_on_convergence=False)
    assert traj.status is RunStatus.COMPLETED_HORIZON
    assert traj.final_state.t == 1.0
    assert [r.t for r in traj.records] == [0.0, 0.5, 1.0]


def test_simulate_homogeneous_follows_logistic(params):
    grid = Grid.interval(1.0, 4)
    ctrl = StepControl(dt_init=1e-3, dt_min=1e-12, fixed_step=True)
    traj = simulate(constant_state(grid, 0.2, 0.2), params, ctrl, horizon=1.0,
                    sample_every=0.1, stop_on_convergence=False)
    assert traj.status is RunStatus.COMPLETED_HORIZON
    expected = logistic_exact(0.2, params.a, params.mu, 1.0)
    assert np.abs(traj.final_state.u.values - expected).max() < 1e-9
    assert expected == pytest.approx(0.3222, abs=1e-4)
    assert traj.steps_rejected == 0


def test_simulate_lifts_zero_cell(grid, params):
    """u starts at zero in one cell and is positive there afterwards"""
    u = np.full(grid.shape, 0.5)
    u[0] = 0.0
    state = State(0.0, Field(grid, u), Field.constant(grid, 0.5))
    traj = simulate(state, params, StepControl(), horizon=1.0, sample_every=0.5,
                    stop_on_convergence=False, snapshot_every=0.5)
    assert [s.t for s in traj.snapshots] == [0.0, 0.5, 1.0]
    assert all(s.u.min() > 0 for s in traj.snapshots[1:])


@pytest.mark.parametrize('fixed_step', [True, False])
def test_simulate_u_cap_is_blow_up(grid, fixed_step):
    ctrl = StepControl(dt_init=1e-2, dt_min=1e-6, u_cap=0.5, fixed_step=fixed_step)
    traj = simulate(constant_state(grid, 0.4, 0.5), Params(1.0, 0.5, 0.5), ctrl,
                    horizon=20.0, sample_every=0.5)
    assert traj.status is RunStatus.BLOW_UP_SUSPECTED
    assert not traj.status.success
    assert traj.steps_rejected >= 1
    assert traj.final_state.u.max() <= 0.5


def test_simulate_v_floor(grid, params):
    ctrl = StepControl(dt_init=1e-2, dt_min=1e-6, v_floor=0.5, fixed_step=True)
    traj = simulate(constant_state(grid, 1e-6, 0.6), params, ctrl,
                    horizon=5.0, sample_every=0.5)
    assert traj.status is RunStatus.V_FLOOR_HIT
    assert traj.final_state.v.min() >= 0.5
    assert traj.records[-1].t == traj.final_state.t


def test_simulate_is_deterministic(params):
    grid = Grid.interval(10.0, 32)
    x = grid.centers()[0]
    state = State(0.0, Field(grid, 0.5 + 0.2 * np.cos(np.pi * x / 10)),
                  Field(grid, 0.5 + 0.1 * np.cos(2 * np.pi * x / 10)))
    runs = [simulate(state, params, StepControl(), horizon=2.0, sample_every=0.5)
            for _ in range(2)]
    assert records_frame(runs[0].records).equals(records_frame(runs[1].records))
    assert np.array_equal(runs[0].final_state.u.values, runs[1].final_state.u.values)


def test_simulate_rejects_bad_input(grid, steady_state):
    with pytest.raises(DomainError):
        simulate(steady_state, Params(0.0, 0.0, 0.5, degenerate=True), StepControl(),
                 horizon=1.0, sample_every=0.5)
    with pytest.raises(AdmissibilityError):
        simulate(constant_state(grid, 0.5, 0.0), Params(1.0, 2.0, 0.5), StepControl(),
                 horizon=1.0, sample_every=0.5)
    with pytest.raises(AdmissibilityError):
        simulate(constant_state(grid, 0.0, 1.0), Params(1.0, 2.0, 0.5), StepControl(),
                 horizon=1.0, sample_every=0.5)


def test_detect_convergence(params, record_factory):
    """Deviations e^-t fall below 1e-6 for five integer samples from t=18 on"""
    records = [record_factory(t=float(t), linf_u_dev=math.exp(-t), linf_v_dev=math.exp(-t))
               for t in range(25)]
    assert not detect_convergence(records[:18], params, 1e-6)
    assert detect_convergence(records[:19], params, 1e-6)
    assert not detect_convergence(records[:3], params, 10.0)
    with pytest.raises(DomainError):
        detect_convergence([], params, 1e-6)


def test_sample_time_snaps_to_horizon():
    assert sample_time(2, 0.5, 1.0) == 1.0
    assert sample_time(5, 0.5, 1.0) == 1.0
    assert sample_time(1, 0.5, 1.0) == 0.5
    # 100 * 0.57 rounds just below 57
    assert sample_time(100, 0.57, 57.0) == 57.0
    assert sample_time(99, 0.57, 57.0) < 57.0


def test_simulate_has_no_duplicate_final_sample(params):
    grid = Grid.interval(1.0, 4)
    ctrl = StepControl(dt_init=1e-2, dt_min=1e-12, fixed_step=True)
    traj = simulate(constant_state(grid, 0.2, 0.2), params, ctrl, horizon=5.7,
                    sample_every=0.57, stop_on_convergence=False)
    times = [r.t for r in traj.records]
    assert len(times) == 11
    assert times[-1] == 5.7
    assert all(b - a > 0.5 for a, b in zip(times, times[1:]))


def wavy_state(grid):
    x = grid.centers()[0]
    return State(0.0, Field(grid, 0.5 + 0.2 * np.cos(np.pi * x / 10)),
                 Field(grid, 0.5 + 0.1 * np.cos(2 * np.pi * x / 10)))


def test_simulate_respects_mass_bound(params):
    grid = Grid.interval(10.0, 32)
    traj = simulate(wavy_state(grid), params, StepControl(), horizon=5.0,
                    sample_every=0.25, stop_on_convergence=False)
    report = check_mass_bound(traj, params, grid)
    assert report.violations == 0
    assert report.worst_ratio <= 1.01


def test_simulate_w_neg_stays_bounded(params):
    grid = Grid.interval(10.0, 32)
    traj = simulate(wavy_state(grid), params, StepControl(), horizon=5.0,
                    sample_every=0.25, stop_on_convergence=False)
    w_neg = [r.w_neg for r in traj.records]
    assert all(math.isfinite(w) for w in w_neg)
    assert max(w_neg) <= 1.5 * max(w_neg[0], w_neg[-1])


def test_simulate_two_dimensions(params):
    """Data symmetric under swapping x and y stays symmetric; transport and
    diffusion still conserve mass"""
    grid = Grid.rectangle(10.0, 10.0, 16, 16)
    x, y = grid.mesh()
    bump = np.cos(np.pi * x / 10) * np.cos(np.pi * y / 10)
    state = State(0.0, Field(grid, 0.5 + 0.2 * bump), Field(grid, 0.5 + 0.1 * bump))
    traj = simulate(state, params, StepControl(), horizon=1.0, sample_every=0.25,
                    stop_on_convergence=False)
    assert traj.status is RunStatus.COMPLETED_HORIZON
    assert len(traj.records) == 5
    u, v = traj.final_state.u.values, traj.final_state.v.values
    assert u.min() > 0 and v.min() > 0
    assert u == pytest.approx(u.T, abs=1e-12)
    assert v == pytest.approx(v.T, abs=1e-12)
    du, _dv = rhs(traj.final_state, params)
    reaction = params.a * u - params.mu * u ** 2
    assert abs((du.values - reaction).sum()) * grid.cell_volume < 1e-12
