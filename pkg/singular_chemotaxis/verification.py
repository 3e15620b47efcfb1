"""Acceptance suite run by `verify`.

Each criterion returns a CriterionResult with the measured margins. The
"fast" suite uses reduced grids and horizons; "full" uses the desk-scale
sizes. Multi-run criteria go through the sweep executor, so points run
concurrently when verify.workers > 1.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .config import (ExperimentConfig, FieldSpec, InitialConfig, VerifyConfig,
                     config_from_dict)
from .diagnostics import grad_sq_integral
from .errors import ChemotaxisError
from .grid_ops import (Field, Grid, State, chemotactic_divergence_array,
                       laplacian, laplacian_array, rhs)
from .integrator import RunStatus, StepControl, simulate, step
from .model_core import (Params, lyapunov_constants, p_g_range, q1_plus, q2_range,
                         select_kappa_q0)
from .oracle import homogeneous_v_exact, logistic_exact, tiny_grid_rhs_oracle
from .runner import execute_run, generate_initial_data, sweep_point, sweep_rows

logger = logging.getLogger(__name__)

DOMAIN_LENGTH = 10.0
OK_STATUSES = (RunStatus.COMPLETED_HORIZON.value, RunStatus.CONVERGED_EARLY.value)


@dataclass(frozen=True)
class SuiteSizes:
    cells: int
    refined_cells: int
    horizon: float
    n_seeds: int
    oracle_dt: float
    order_dts: Tuple[float, ...]
    space_cells: Tuple[int, ...]
    conservation_steps: int
    rhs_states: int
    scaling_cells: int
    scaling_horizon: float
    decay_cells: int
    decay_horizon: float


SUITES = {
    'fast': SuiteSizes(cells=32, refined_cells=64, horizon=10.0, n_seeds=2,
                       oracle_dt=1e-3, order_dts=(0.2, 0.1, 0.05, 0.025),
                       space_cells=(16, 32, 64), conservation_steps=2000,
                       rhs_states=200, scaling_cells=32, scaling_horizon=5.0,
                       decay_cells=32, decay_horizon=30.0),
    'full': SuiteSizes(cells=128, refined_cells=256, horizon=50.0, n_seeds=5,
                       oracle_dt=1e-4, order_dts=(0.2, 0.1, 0.05, 0.025),
                       space_cells=(32, 64, 128, 256), conservation_steps=10000,
                       rhs_states=1000, scaling_cells=64, scaling_horizon=20.0,
                       decay_cells=64, decay_horizon=50.0),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: Dict = field(default_factory=dict)
    error: Optional[str] = None

    def as_dict(self):
        return {'number': self.number, 'name': self.name, 'passed': self.passed,
                'measured': self.measured, 'error': self.error}


@dataclass
class VerifyReport:
    suite: str
    results: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self):
        return {'suite': self.suite, 'passed': self.passed,
                'criteria': [r.as_dict() for r in self.results]}


def _random_fourier(offset=1.0, amplitude=0.3, modes=3, scale=1.0):
    return {'generator': 'random-fourier', 'offset': offset,
            'amplitude': amplitude, 'modes': modes, 'scale': scale}


def _run_config(model: Dict, cells: int, horizon: float, initial: Dict,
                sample_every: float = 0.5, **run) -> ExperimentConfig:
    return config_from_dict({
        'mode': 'sweep',
        'model': dict(model, dim=1),
        'grid': {'extents': [DOMAIN_LENGTH], 'cells': [cells]},
        'run': dict(run, horizon=horizon, sample_every=sample_every),
        'initial': initial,
    })


def _order(hs, errors) -> float:
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


###############################################################################
#  CRITERIA
###############################################################################

def criterion_oracle(vcfg: VerifyConfig, sizes: SuiteSizes) -> CriterionResult:
    """Homogeneous run against the closed-form logistic and the quadrature v."""
    params = Params(1.0, 2.0, 0.5)
    grid = Grid.interval(1.0, 4)
    initial = State(0.0, Field.constant(grid, 0.2), Field.constant(grid, 0.2))
    ctrl = StepControl(dt_init=sizes.oracle_dt, dt_min=1e-12, fixed_step=True)
    traj = simulate(initial, params, ctrl, 1.0, 1.0, stop_on_convergence=False)
    u_ref = logistic_exact(0.2, 1.0, 2.0, 1.0)
    v_ref = homogeneous_v_exact(0.2, 0.2, 1.0, 2.0, 1.0)
    err_u = float(np.abs(traj.final_state.u.values - u_ref).max())
    err_v = float(np.abs(traj.final_state.v.values - v_ref).max())
    passed = (traj.status == RunStatus.COMPLETED_HORIZON
              and max(err_u, err_v) <= vcfg.oracle_tol)
    return CriterionResult(1, 'oracle-equivalence', passed,
                           {'err_u': err_u, 'err_v': err_v, 'u_ref': u_ref,
                            'v_ref': v_ref, 'status': traj.status.value})


def criterion_order(vcfg: VerifyConfig, sizes: SuiteSizes) -> CriterionResult:
    """Refinement slopes of the Laplacian, the gradient energy and RK4."""
    length = 1.0
    k = math.pi / length
    hs, lap_err, grad_err = [], [], []
    for cells in sizes.space_cells:
        grid = Grid.interval(length, cells)
        f = Field.from_function(grid, lambda x: np.cos(k * x))
        lap_err.append(float(np.abs(laplacian(f).values + k ** 2 * f.values).max()))
        grad_err.append(abs(grad_sq_integral(f) - k ** 2 * length / 2))
        hs.append(grid.h_min)
    space_lap = _order(hs, lap_err)
    space_grad = _order(hs, grad_err)

    params = Params(1.0, 2.0, 0.5)
    grid = Grid.interval(40.0, 4)
    horizon = 2.0
    u_ref = logistic_exact(0.2, 1.0, 2.0, horizon)
    time_err = []
    for dt in sizes.order_dts:
        initial = State(0.0, Field.constant(grid, 0.2), Field.constant(grid, 0.2))
        ctrl = StepControl(dt_init=dt, dt_min=1e-12, fixed_step=True)
        traj = simulate(initial, params, ctrl, horizon, horizon, stop_on_convergence=False)
        time_err.append(float(np.abs(traj.final_state.u.values - u_ref).max()))
    time_order = _order(sizes.order_dts, time_err)

    passed = (abs(space_lap - vcfg.space_order) <= vcfg.space_order_tol
              and abs(space_grad - vcfg.space_order) <= vcfg.space_order_tol
              and abs(time_order - vcfg.time_order) <= vcfg.time_order_tol)
    return CriterionResult(2, 'operator-order', passed,
                           {'laplacian_order': space_lap, 'grad_sq_order': space_grad,
                            'time_order': time_order, 'time_errors': time_err})


def transport_rhs(divergence: Callable) -> Callable:
    """rhs with the reaction terms left out and a pluggable transport divergence."""
    def rhs_func(u, v, params, h, interface_mean):
        du = laplacian_array(u, h) - divergence(u, v, params.chi, h, interface_mean)
        dv = laplacian_array(v, h) - v + u
        return du, dv
    return rhs_func


def criterion_conservation(vcfg: VerifyConfig, sizes: SuiteSizes,
                           divergence: Callable = chemotactic_divergence_array
                           ) -> CriterionResult:
    """Total mass of u under transport and diffusion alone."""
    params = Params(0.0, 0.0, 0.5, degenerate=True)
    grid = Grid.interval(DOMAIN_LENGTH, sizes.cells)
    initial = InitialConfig(seed=vcfg.seeds[0], u=FieldSpec(**_random_fourier()),
                            v=FieldSpec(**_random_fourier()))
    state = generate_initial_data(initial, grid)
    ctrl = StepControl()
    dt = ctrl.stability_bound(grid)
    rhs_func = transport_rhs(divergence)
    mass0 = state.u.total()
    drift = 0.0
    for _ in range(sizes.conservation_steps):
        state = step(state, params, ctrl, dt, rhs_func=rhs_func)
        drift = max(drift, abs(state.u.total() - mass0) / mass0)
    return CriterionResult(3, 'conservation', drift <= vcfg.conservation_tol,
                           {'relative_drift': drift, 'steps': sizes.conservation_steps})


def boundedness_point(index: int, point: Dict, config: ExperimentConfig) -> Dict:
    """One seeded run of the boundedness study."""
    cfg = _run_config({'a': 1.0, 'mu': 1.0, 'chi': 0.5}, point['cells'], point['horizon'],
                      {'seed': point['seed'], 'u': _random_fourier(), 'v': _random_fourier()})
    summary = execute_run(cfg).summary
    return {'index': index, 'seed': point['seed'], 'cells': point['cells'],
            'status': summary['status'], 'error': None,
            'sup_mass_energy': summary['sup_mass_energy'],
            'sup_max_u': summary['sup_max_u'], 'eta0': summary['eta0_measured']}


def _boundedness_rows(vcfg: VerifyConfig, sizes: SuiteSizes, config: ExperimentConfig):
    seeds = vcfg.seeds[:sizes.n_seeds]
    points = [{'index': i, 'seed': seed, 'cells': cells, 'horizon': sizes.horizon}
              for i, (seed, cells) in enumerate(
                  (s, c) for s in seeds for c in (sizes.cells, sizes.refined_cells))]
    rows = sweep_rows(config, points, vcfg.workers, point_func=boundedness_point)
    pairs = {}
    for row in rows:
        pairs.setdefault(row['seed'], {})[row['cells']] = row
    return rows, pairs


def criterion_boundedness(vcfg, sizes, rows, pairs) -> CriterionResult:
    errors = [r['error'] for r in rows if r.get('error')]
    statuses = [r.get('status') for r in rows]
    ratios = []
    for runs in pairs.values():
        coarse, fine = runs.get(sizes.cells), runs.get(sizes.refined_cells)
        if coarse and fine and coarse.get('sup_mass_energy') and fine.get('sup_mass_energy'):
            ratios.append(fine['sup_mass_energy'] / coarse['sup_mass_energy'])
    sup_u = [r.get('sup_max_u') for r in rows]
    band = vcfg.refinement_band
    passed = (not errors and all(s in OK_STATUSES for s in statuses)
              and all(x is not None and math.isfinite(x) for x in sup_u)
              and len(ratios) == len(pairs)
              and all(1 / band <= x <= band for x in ratios))
    return CriterionResult(4, 'boundedness', passed,
                           {'statuses': statuses, 'sup_max_u': sup_u,
                            'refinement_ratios': ratios, 'errors': errors})


def criterion_lower_bound(vcfg, sizes, rows, pairs) -> CriterionResult:
    etas = [r.get('eta0') for r in rows]
    changes = []
    for runs in pairs.values():
        coarse, fine = runs.get(sizes.cells), runs.get(sizes.refined_cells)
        if coarse and fine and coarse.get('eta0') and fine.get('eta0'):
            changes.append(abs(fine['eta0'] - coarse['eta0']) / coarse['eta0'])
    passed = (all(e is not None and e > 0 for e in etas)
              and len(changes) == len(pairs)
              and all(c < vcfg.eta_rel_tol for c in changes))
    return CriterionResult(5, 'lower-bound', passed,
                           {'eta0': etas, 'relative_changes': changes})


def criterion_scaling(vcfg: VerifyConfig, sizes: SuiteSizes) -> CriterionResult:
    """mu * sup_t int u**kappa v**-q0 across mu in {1, 2, 4, 8} with scaled data."""
    config = _run_config({'a': 1.0, 'mu': 1.0, 'chi': 0.5}, sizes.scaling_cells,
                         sizes.scaling_horizon,
                         {'seed': vcfg.seeds[0], 'u': _random_fourier(), 'v': _random_fourier()},
                         sample_every=0.1, scale_initial=True)
    points = [{'index': i, 'mu': mu} for i, mu in enumerate((1.0, 2.0, 4.0, 8.0))]
    rows = sweep_rows(config, points, vcfg.workers, point_func=sweep_point)
    values = [r.get('sup_w_pos_mu') for r in rows]
    errors = [r['error'] for r in rows if r.get('error')]
    ok = not errors and all(v is not None and v > 0 for v in values)
    spread = max(values) / min(values) if ok else math.inf
    passed = ok and spread <= vcfg.scaling_band
    return CriterionResult(6, 'weighted-integral-scaling', passed,
                           {'mu_sup_w_pos': values, 'spread': spread, 'errors': errors,
                            'statuses': [r.get('status') for r in rows]})


def decay_point(index: int, point: Dict, config: ExperimentConfig) -> Dict:
    """One seeded run above the Lyapunov threshold, near the steady state."""
    cfg = _run_config({'a': 1.0, 'mu': 4.0, 'chi': 0.5}, point['cells'], point['horizon'],
                      {'seed': point['seed'],
                       'u': _random_fourier(amplitude=0.02, scale=0.25),
                       'v': _random_fourier(offset=0.3, amplitude=0.02)},
                      sample_every=0.1, tol=1e-6)
    outcome = execute_run(cfg)
    summary = outcome.summary
    rates = summary['rates']
    return {'index': index, 'seed': point['seed'], 'status': summary['status'],
            'error': summary['lyapunov_error'],
            'lyapunov_check': summary['lyapunov_check'],
            'rate_bound': outcome.consts.rate_bound if outcome.consts else None,
            'G0': outcome.consts.G0 if outcome.consts else None,
            'gamma_u': rates['linf_u_dev']['gamma'],
            'gamma_v': rates['linf_v_dev']['gamma'],
            'final_u_dev': summary['linf_u_dev_final'],
            'final_v_dev': summary['linf_v_dev_final']}


def criterion_lyapunov(vcfg, rows) -> CriterionResult:
    checks = [r.get('lyapunov_check') for r in rows]
    errors = [r['error'] for r in rows if r.get('error')]
    passed = (not errors and all(c is not None for c in checks)
              and all(c['violations'] == 0 and c['increases'] == 0 for c in checks))
    return CriterionResult(7, 'lyapunov-decay', passed,
                           {'checks': checks, 'errors': errors,
                            'statuses': [r.get('status') for r in rows]})


def criterion_rate(vcfg, rows) -> CriterionResult:
    passed = bool(rows)
    for r in rows:
        bound = r.get('rate_bound')
        gammas = (r.get('gamma_u'), r.get('gamma_v'))
        if bound is None or any(g is None or not g >= bound for g in gammas):
            passed = False
        devs = (r.get('final_u_dev'), r.get('final_v_dev'))
        if any(d is None or not d < vcfg.final_dev_tol for d in devs):
            passed = False
    return CriterionResult(8, 'convergence-rate', passed,
                           {'runs': [{k: r.get(k) for k in
                                      ('seed', 'G0', 'rate_bound', 'gamma_u', 'gamma_v',
                                       'final_u_dev', 'final_v_dev')} for r in rows]})


def criterion_algebra(vcfg: VerifyConfig, sizes: SuiteSizes) -> CriterionResult:
    """Closed-form constants against hand-evaluated values."""
    checks = {}
    consts = lyapunov_constants(Params(1.0, 2.0, 0.5), 1.0)
    checks['G0'] = (consts.G0, 127 / 144)
    checks['L'] = (consts.L, 17 / 18)
    checks['rate_bound'] = (consts.rate_bound, 127 / 432)
    window = q2_range(2.0, 0.5)
    checks['q2_lower'] = (window.lower, 0.5 * (1 - math.sqrt(0.5)))
    checks['q2_upper'] = (window.upper, 0.5 * (1 + math.sqrt(0.5)))
    sel = select_kappa_q0(Params(1.0, 1.0, 0.5, 2))
    checks['kappa_n2'] = (sel.kappa, 2.5)
    checks['q0_n2'] = (sel.q0, 0.5 * (0.75 * (1 - math.sqrt(0.375)) + 1))
    sel3 = select_kappa_q0(Params(1.0, 1.0, 0.5, 3))
    checks['kappa_n3'] = (sel3.kappa, 2.75)
    checks['q0_n3'] = (sel3.q0, 0.875)
    checks['q1_plus'] = (q1_plus(0.5, 2.0), 0.75 * (math.sqrt(3) - 1))
    pg = p_g_range(1.0, 1.0).window
    checks['p_g_lower'] = (pg.lower, 3 - 2 * math.sqrt(3))
    checks['p_g_upper'] = (pg.upper, 3 + 2 * math.sqrt(3))
    errors = {k: abs(got - want) for k, (got, want) in checks.items()}
    worst = max(errors.values())
    return CriterionResult(9, 'constant-algebra', worst <= vcfg.algebra_tol,
                           {'worst_error': worst, 'errors': errors})


def criterion_rhs(vcfg: VerifyConfig, sizes: SuiteSizes) -> CriterionResult:
    """Brute-force face enumeration against the array operators."""
    rng = np.random.default_rng(vcfg.seeds[0])
    worst = 0.0
    for _ in range(sizes.rhs_states):
        cells = int(rng.integers(4, 9))
        grid = Grid.interval(float(rng.uniform(0.5, 5.0)), cells)
        params = Params(*(float(x) for x in rng.uniform(0.1, 3.0, size=3)))
        u = rng.uniform(0.0, 2.0, cells)
        v = rng.uniform(0.1, 2.0, cells)
        du, dv = rhs(State(0.0, Field(grid, u), Field(grid, v)), params)
        du_ref, dv_ref = tiny_grid_rhs_oracle(u, v, params, grid.h[0])
        for got, ref in ((du.values, du_ref), (dv.values, dv_ref)):
            ref = np.asarray(ref)
            worst = max(worst, float(np.abs(got - ref).max() / max(1.0, np.abs(ref).max())))
    return CriterionResult(10, 'rhs-equivalence', worst <= vcfg.rhs_tol,
                           {'worst_relative_error': worst, 'states': sizes.rhs_states})


###############################################################################
#  SUITE
###############################################################################

def _guarded(number: int, name: str, func, *args) -> CriterionResult:
    try:
        result = func(*args)
    except ChemotaxisError as e:
        logger.warning('criterion %d (%s) raised %s', number, name, e)
        return CriterionResult(number, name, False, error=f'{type(e).__name__}: {e}')
    logger.info('criterion %d %s: %s', number, name, 'pass' if result.passed else 'FAIL')
    return result


def run_verify(config: ExperimentConfig, suite: Optional[str] = None) -> VerifyReport:
    """Run the selected acceptance criteria (all by default)."""
    vcfg = config.verify
    suite = suite or vcfg.suite
    sizes = SUITES[suite]
    wanted = set(vcfg.criteria or range(1, 11))
    results = []
    simple = {1: ('oracle-equivalence', criterion_oracle),
              2: ('operator-order', criterion_order),
              3: ('conservation', criterion_conservation),
              6: ('weighted-integral-scaling', criterion_scaling),
              9: ('constant-algebra', criterion_algebra),
              10: ('rhs-equivalence', criterion_rhs)}
    for number in (1, 2, 3):
        if number in wanted:
            name, func = simple[number]
            results.append(_guarded(number, name, func, vcfg, sizes))

    if wanted & {4, 5}:
        try:
            rows, pairs = _boundedness_rows(vcfg, sizes, config)
        except ChemotaxisError as e:
            rows, pairs = [], {}
            logger.warning('boundedness runs failed: %s', e)
        if 4 in wanted:
            results.append(_guarded(4, 'boundedness', criterion_boundedness,
                                    vcfg, sizes, rows, pairs))
        if 5 in wanted:
            results.append(_guarded(5, 'lower-bound', criterion_lower_bound,
                                    vcfg, sizes, rows, pairs))
    if 6 in wanted:
        results.append(_guarded(6, *simple[6], vcfg, sizes))
    if wanted & {7, 8}:
        points = [{'index': i, 'seed': seed, 'cells': sizes.decay_cells,
                   'horizon': sizes.decay_horizon}
                  for i, seed in enumerate(vcfg.seeds[:sizes.n_seeds])]
        rows = sweep_rows(config, points, vcfg.workers, point_func=decay_point)
        if 7 in wanted:
            results.append(_guarded(7, 'lyapunov-decay', criterion_lyapunov, vcfg, rows))
        if 8 in wanted:
            results.append(_guarded(8, 'convergence-rate', criterion_rate, vcfg, rows))
    for number in (9, 10):
        if number in wanted:
            results.append(_guarded(number, *simple[number], vcfg, sizes))
    report = VerifyReport(suite, results)
    logger.info('verify (%s): %d/%d criteria passed', suite,
                sum(r.passed for r in results), len(results))
    return report
