"""Initial data, single runs, sweeps and their files on disk."""

import asyncio
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import ExperimentConfig, FieldSpec, InitialConfig
from .diagnostics import (DecayWindow, DiagnosticsSpec, RateFit, attach_lyapunov,
                          check_log_comparison, check_lyapunov_decay,
                          check_mass_bound, estimate_eta0, fit_trajectory_rates,
                          records_frame, windowed_dissipation_sup)
from .errors import AdmissibilityError, ChemotaxisError, DomainError
from .executors import single_run, sliding_window_executor
from .functions import calc_average, jsonable, replace_chars
from .grid_ops import Field, Grid, State
from .integrator import Trajectory, check_admissible, simulate
from .model_core import (LyapunovConstants, Params, check_boundedness_conditions,
                         exponent_windows, lyapunov_constants)
from .parameters import Parameters, axis_from_config, format_parameters

logger = logging.getLogger(__name__)

SWEEP_KEYS = ('a', 'mu', 'chi')
SWEEP_COLUMNS = ('index', 'a', 'mu', 'chi', 'dim', 'status', 'outcome', 'eta0',
                 'gamma_u', 'gamma_v', 'rate_bound', 'cond_a_ok', 'cond_chi_ok',
                 'margin_a', 'margin_chi', 'lyapunov_violations', 'sup_w_pos_mu',
                 'error')


###############################################################################
#  INITIAL DATA
###############################################################################

def _random_fourier(spec: FieldSpec, grid: Grid, seed: int, name: str) -> np.ndarray:
    # |sum of modes| <= amplitude * modes, so offset - amplitude * modes bounds the minimum
    lower = spec.offset - spec.amplitude * spec.modes
    if name == 'v' and not lower > 0:
        raise AdmissibilityError(
            f'v0 bound offset - amplitude*modes = {lower:.3g} is not positive')
    if name == 'u' and not lower >= 0:
        raise AdmissibilityError(
            f'u0 bound offset - amplitude*modes = {lower:.3g} is negative')
    rng = np.random.default_rng(seed)
    coords = grid.mesh()
    values = np.full(grid.shape, spec.offset)
    for k in range(1, spec.modes + 1):
        wave = [k] + [int(m) for m in rng.integers(0, spec.modes + 1, size=grid.dim - 1)]
        mode = np.ones(grid.shape)
        for x, m, length in zip(coords, wave, grid.extents):
            # cosine modes have zero normal derivative on the boundary
            mode = mode * np.cos(math.pi * m * x / length)
        values = values + spec.amplitude * rng.uniform(-1.0, 1.0) * mode
    return values


def _gaussian_bump(spec: FieldSpec, grid: Grid) -> np.ndarray:
    center = spec.center or [0.5 * e for e in grid.extents]
    if len(center) != grid.dim:
        raise DomainError(f'bump center {center} does not match grid dimension {grid.dim}')
    r2 = sum((x - c) ** 2 for x, c in zip(grid.mesh(), center))
    return spec.floor + spec.height * np.exp(-r2 / (2 * spec.width ** 2))


def generate_field(spec: FieldSpec, grid: Grid, seed: int, name: str = 'u') -> Field:
    if spec.generator == 'constant':
        values = np.full(grid.shape, spec.value)
    elif spec.generator == 'gaussian-bump':
        values = _gaussian_bump(spec, grid)
    elif spec.generator == 'random-fourier':
        values = _random_fourier(spec, grid, seed, name)
    else:
        raise DomainError(f'unknown initial-data generator {spec.generator!r}')
    return Field(grid, spec.scale * values)


def generate_initial_data(initial: InitialConfig, grid: Grid, scale: float = 1.0) -> State:
    """Build (u0, v0) from the configured generators.

    u uses `initial.seed` and v `initial.seed + 1` unless a field sets its
    own seed. Both fields are multiplied by `scale`.

    Raises:
        AdmissibilityError: The data violate u0 >= 0, u0 not identically 0,
            v0 > 0.
    """
    u_seed = initial.u.seed if initial.u.seed is not None else initial.seed
    v_seed = initial.v.seed if initial.v.seed is not None else initial.seed + 1
    u = generate_field(initial.u, grid, u_seed, 'u')
    v = generate_field(initial.v, grid, v_seed, 'v')
    if scale != 1.0:
        u, v = Field(grid, scale * u.values), Field(grid, scale * v.values)
    state = State(0.0, u, v)
    check_admissible(state)
    return state


def initial_data_scaling(params: Params, kappa: float, q0: float) -> float:
    """mu**(-1/(kappa - q0)): scaling both fields by it keeps
    mu * int u**kappa v**-q0 at t = 0 independent of mu."""
    if not kappa > q0:
        raise DomainError(f'need kappa > q0, got {kappa}, {q0}')
    return params.mu ** (-1.0 / (kappa - q0))


###############################################################################
#  SINGLE RUN
###############################################################################

@dataclass
class RunOutcome:
    trajectory: Trajectory
    summary: Dict
    consts: Optional[LyapunovConstants]
    rates: Dict[str, RateFit]


def _fit_status(trajectory: Trajectory, rates: Dict[str, RateFit], tol: float) -> str:
    first = trajectory.records[0]
    if first.linf_u_dev < tol and first.linf_v_dev < tol:
        return 'already-converged'
    if rates['linf_u_dev'].gamma is not None and rates['linf_v_dev'].gamma is not None:
        return 'ok'
    return 'failed'


def execute_run(config: ExperimentConfig) -> RunOutcome:
    """Simulate one configuration and evaluate every diagnostic check.

    F and G are provisional while the run is in progress; once eta0 is known
    (measured, unless the config supplies one) the Lyapunov constants are
    formed and F, G are recomputed from the stored components.
    """
    params = config.model.to_params()
    grid = config.grid.to_grid()
    dcfg = config.diagnostics
    windows = exponent_windows(params)
    scale = 1.0
    if config.run.scale_initial:
        if windows.selection is None:
            raise DomainError('scale_initial needs an admissible (kappa, q0)')
        scale = initial_data_scaling(params, windows.kappa, windows.q0)
    initial = generate_initial_data(config.initial, grid, scale)
    diag = DiagnosticsSpec.for_params(params, eta0=dcfg.eta0, L=dcfg.L)
    trajectory = simulate(initial, params, config.step.to_control(),
                          config.run.horizon, config.run.sample_every, diag,
                          tol=config.run.tol,
                          stop_on_convergence=config.run.stop_on_convergence,
                          snapshot_every=config.run.snapshot_every,
                          interface_mean=config.run.interface_mean)

    eta = estimate_eta0(trajectory)
    eta0 = dcfg.eta0 if dcfg.eta0 is not None else eta.eta0
    consts = None
    lyapunov_error = None
    try:
        consts = lyapunov_constants(params, eta0, dcfg.L)
    except ChemotaxisError as e:
        lyapunov_error = f'{type(e).__name__}: {e}'
        logger.info('no Lyapunov constants for this run: %s', e)
    lyapunov_check = None
    if consts is not None:
        trajectory = attach_lyapunov(trajectory, consts)
        lyapunov_check = check_lyapunov_decay(trajectory, consts, dcfg.lyapunov_slack,
                                              dcfg.lyapunov_abs_tol).as_dict()
    window = DecayWindow(dcfg.decay_delta, dcfg.decay_floor, dcfg.min_samples)
    rates = fit_trajectory_rates(trajectory, params, consts, window)
    records = trajectory.records
    final = trajectory.final_state
    summary = {
        'params': {'a': params.a, 'mu': params.mu, 'chi': params.chi, 'dim': params.dim},
        'grid': {'extents': list(grid.extents), 'cells': list(grid.cells)},
        'status': trajectory.status.value,
        'steps_accepted': trajectory.steps_accepted,
        'steps_rejected': trajectory.steps_rejected,
        'final_time': final.t,
        'eta0': eta0,
        'eta0_measured': eta.eta0,
        't_of_min': eta.t_of_min,
        'initial_scale': scale,
        'sup_mass_energy': max(r.mass_energy for r in records),
        'sup_max_u': max(r.max_u for r in records),
        'sup_w_pos': max(r.w_pos for r in records),
        'windowed_dissipation_sup': windowed_dissipation_sup(trajectory, dcfg.dissipation_window),
        'u_final_mean': final.u.total() / grid.measure,
        'v_final_mean': final.v.total() / grid.measure,
        'linf_u_dev_final': records[-1].linf_u_dev,
        'linf_v_dev_final': records[-1].linf_v_dev,
        'conditions': check_boundedness_conditions(params).as_dict(),
        'lyapunov': consts.as_dict() if consts else None,
        'lyapunov_error': lyapunov_error,
        'lyapunov_check': lyapunov_check,
        'rates': {name: fit.as_dict() for name, fit in rates.items()},
        'fit_status': _fit_status(trajectory, rates, config.run.tol),
        'mass_check': check_mass_bound(trajectory, params, grid, dcfg.mass_rel_tol).as_dict(),
        'log_comparison': check_log_comparison(trajectory, params, dcfg.decay_delta).as_dict(),
        'exponents': {'p': diag.p_neg, 'q': diag.q_neg, 'kappa': diag.kappa, 'q0': diag.q0},
    }
    return RunOutcome(trajectory, summary, consts, rates)


def write_field_csv(field: Field, path):
    """One row per cell: index, center coordinates, value."""
    field.to_frame().to_csv(path, index=False)


def write_trajectory_csv(trajectory: Trajectory, path):
    records_frame(trajectory.records).to_csv(path, index=False)


def write_json(data, path):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(jsonable(data), f, indent=2, sort_keys=True)
        f.write('\n')


def run_simulate(config: ExperimentConfig) -> Dict:
    """Run one simulation; write the trajectory CSV and the summary JSON.

    A terminal status other than CompletedHorizon/ConvergedEarly is reported
    in the summary, not raised.
    """
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    outcome = execute_run(config)
    write_trajectory_csv(outcome.trajectory, out / config.output.trajectory)
    write_json(outcome.summary, out / config.output.summary)
    if config.output.write_fields:
        write_field_csv(outcome.trajectory.final_state.u, out / 'u_final.csv')
        write_field_csv(outcome.trajectory.final_state.v, out / 'v_final.csv')
    logger.info('run finished with %s; wrote %s', outcome.summary['status'], out)
    return outcome.summary


###############################################################################
#  SWEEP
###############################################################################

def point_config(config: ExperimentConfig, point: Dict) -> ExperimentConfig:
    update = {k: float(point[k]) for k in SWEEP_KEYS if k in point}
    return config.model_copy(update={'model': config.model.model_copy(update=update)})


def sweep_point(index: int, point: Dict, config: ExperimentConfig) -> Dict:
    """One row of the sweep table. Model errors are recorded in the row."""
    row = {k: point.get(k, getattr(config.model, k)) for k in SWEEP_KEYS}
    row.update(index=index, dim=config.model.dim, status=None, error=None)
    try:
        cfg = point_config(config, point)
        outcome = execute_run(cfg)
    except ChemotaxisError as e:
        row['error'] = f'{type(e).__name__}: {e}'
        return row
    summary = outcome.summary
    conditions = summary['conditions']
    row.update(
        status=summary['status'],
        eta0=summary['eta0'],
        gamma_u=outcome.rates['linf_u_dev'].gamma,
        gamma_v=outcome.rates['linf_v_dev'].gamma,
        rate_bound=outcome.consts.rate_bound if outcome.consts else None,
        cond_a_ok=conditions['cond_a_ok'],
        cond_chi_ok=conditions['cond_chi_ok'],
        margin_a=conditions['margin_a'],
        margin_chi=conditions['margin_chi'],
        lyapunov_violations=(summary['lyapunov_check'] or {}).get('violations'),
        sup_w_pos_mu=cfg.model.mu * summary['sup_w_pos'],
    )
    template = config.output.point_trajectory
    if template:
        name = replace_chars(format_parameters(Parameters(point), template), '_', '/\\ ')
        config.output_dir.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(outcome.trajectory, config.output_dir / name)
    return row


def build_sweep_parameters(config: ExperimentConfig,
                           axes: Optional[Sequence[str]] = None) -> Parameters:
    """Fixed model values overlaid with the configured axes and any
    command-line axes of the form `mu=1,2,4,8`."""
    parameters = Parameters({k: getattr(config.model, k) for k in SWEEP_KEYS})
    for key, axis in config.sweep.axes.items():
        parameters[key] = axis_from_config(axis)
    parameters.update_cmdline(list(axes) if axes else None)
    unknown = set(parameters) - set(SWEEP_KEYS)
    if unknown:
        raise DomainError(f'cannot sweep over {sorted(unknown)}; use {SWEEP_KEYS}')
    return parameters


def _make_pool(config: ExperimentConfig, workers: int):
    if workers <= 1:
        return None
    if config.sweep.executor == 'process':
        return ProcessPoolExecutor(max_workers=workers)
    return ThreadPoolExecutor(max_workers=workers)


def sweep_rows(config: ExperimentConfig, points: List[Dict],
               workers: Optional[int] = None, point_func=sweep_point) -> List[Dict]:
    """Run the points, at most `workers` at a time, and return the rows
    sorted by index."""
    workers = config.sweep.workers if workers is None else workers
    pool = _make_pool(config, workers)
    task_args = {'config': config, 'point_func': point_func, 'pool': pool}
    try:
        if len(points) == 1:
            results = [asyncio.run(single_run(points[0], task_args))]
            elapsed = results[0][3]
        else:
            elapsed, results = asyncio.run(
                sliding_window_executor(points, task_args, workers))
    finally:
        if pool is not None:
            pool.shutdown()
    ok, total_ok, nok, exc = calc_average(results)
    logger.info('sweep of %d points in %.1fs: %d ok (avg %.2fs), %d nok, %d exceptions',
                len(points), elapsed, ok, total_ok / ok if ok else math.nan, nok, exc)
    return [row for _index, _status, row, _elapsed in sorted(results, key=lambda r: r[0])]


def run_sweep(config: ExperimentConfig, axes: Optional[Sequence[str]] = None,
              workers: Optional[int] = None) -> pd.DataFrame:
    """Run every point of the parameter grid and write the sweep CSV."""
    points = build_sweep_parameters(config, axes).points()
    logger.info('sweep over %d points', len(points))
    rows = sweep_rows(config, points, workers)
    frame = pd.DataFrame(rows).reindex(columns=list(SWEEP_COLUMNS))
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out / config.output.sweep, index=False)
    return frame


def condition_report(a: float, chi: float, dim: int) -> Dict:
    """Boundedness conditions and exponent windows for (a, chi, N)."""
    params = Params(a, 1.0, chi, dim)
    report = check_boundedness_conditions(params).as_dict()
    windows = exponent_windows(params)
    report['p_g_window'] = windows.p_g_range.window.as_list() if windows.p_g_range else None
    report['kappa'] = windows.kappa
    report['q0'] = windows.q0
    return report
