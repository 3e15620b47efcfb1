"""Functionals monitored along a run and the inequality checks built on them.

Every sample of a run becomes one DiagnosticsRecord. Its first twelve columns
have a fixed order (COLUMNS); EXTRA_COLUMNS are appended after them and carry
the pieces F and G are assembled from, so both can be recomputed once the
lower bound eta0, and with it G0, is known.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .errors import (ChemotaxisError, DomainError, InsufficientDataError,
                     SingularityError)
from .grid_ops import (Field, Grid, State, integrate_array, integrate_cellwise,
                       laplacian_array)
from .model_core import (LyapunovConstants, Params, exponent_windows,
                         lyapunov_constants)

logger = logging.getLogger(__name__)

COLUMNS = ('t', 'mass_u', 'l2_v', 'grad_l2_v', 'min_v', 'max_u',
           'linf_u_dev', 'linf_v_dev', 'w_neg', 'w_pos', 'F', 'G')
EXTRA_COLUMNS = ('l2_u', 'lap_l2_v', 'h_u', 'sq_u', 'sq_v')

# Check tolerances
LYAPUNOV_SLACK = 0.2
LYAPUNOV_ABS_TOL = 1e-8
DECAY_DELTA = 0.25
MASS_REL_TOL = 0.01


###############################################################################
#  TYPES
###############################################################################

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass_u: float
    l2_v: float
    grad_l2_v: float
    min_v: float
    max_u: float
    linf_u_dev: float
    linf_v_dev: float
    w_neg: float
    w_pos: float
    F: float
    G: float
    l2_u: float
    lap_l2_v: float
    h_u: float
    sq_u: float
    sq_v: float

    @property
    def mass_energy(self) -> float:
        """mass_u + l2_v + grad_l2_v."""
        return self.mass_u + self.l2_v + self.grad_l2_v

    def as_row(self):
        return tuple(getattr(self, c) for c in COLUMNS + EXTRA_COLUMNS)

    def functional(self, L: float) -> float:
        return self.h_u + 0.5 * L * self.sq_v

    def dissipation(self, consts: LyapunovConstants) -> float:
        return consts.G0 * (self.sq_u + 0.5 * consts.L * self.sq_v)

    def with_lyapunov(self, consts: LyapunovConstants) -> 'DiagnosticsRecord':
        return dataclasses.replace(self, F=self.functional(consts.L),
                                   G=self.dissipation(consts))


@dataclass(frozen=True)
class DiagnosticsSpec:
    """Exponents and Lyapunov weights used when recording a state."""
    p_neg: float
    q_neg: float
    kappa: float
    q0: float
    L: float = 1.0
    consts: Optional[LyapunovConstants] = None

    @classmethod
    def for_params(cls, params: Params, eta0: Optional[float] = None,
                   L: Optional[float] = None) -> 'DiagnosticsSpec':
        windows = exponent_windows(params)
        kappa, q0 = windows.kappa, windows.q0
        if kappa is None:
            # w_pos falls back to the mass
            kappa, q0 = 1.0, 0.0
        consts = None
        if eta0 is not None:
            try:
                consts = lyapunov_constants(params, eta0, L)
            except ChemotaxisError as e:
                logger.warning('Lyapunov constants unavailable: %s', e)
        return cls(windows.p_neg, windows.q_neg, kappa, q0,
                   consts.L if consts else (L or 1.0), consts)


@dataclass(frozen=True)
class EtaEstimate:
    eta0: float
    t_of_min: float


@dataclass(frozen=True)
class LyapunovReport:
    checked: int
    violations: int
    worst_margin: float
    increases: int

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class MassReport:
    bound: float
    violations: int
    worst_ratio: float

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class LogComparisonReport:
    checked: int
    violations: int

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RateFit:
    gamma: Optional[float]
    bound: Optional[float]
    error: Optional[str] = None

    @property
    def ok(self) -> Optional[bool]:
        if self.gamma is None or self.bound is None:
            return None
        return self.gamma >= self.bound

    def as_dict(self):
        return {'gamma': self.gamma, 'bound': self.bound, 'ok': self.ok,
                'error': self.error}


@dataclass(frozen=True)
class DecayWindow:
    """Fitting window: samples after ||U-1||_inf first drops below delta."""
    delta: float = DECAY_DELTA
    floor: Optional[float] = None
    min_samples: int = 8

    def start_time(self, records, params: Params) -> float:
        scale = params.mu / params.a
        for r in records:
            if scale * r.linf_u_dev < self.delta:
                return r.t
        raise InsufficientDataError(
            f'||U-1||_inf never dropped below {self.delta}')


###############################################################################
#  FUNCTIONALS
###############################################################################

def _records(trajectory) -> Sequence[DiagnosticsRecord]:
    return getattr(trajectory, 'records', trajectory)


def grad_sq_integral_array(v: np.ndarray, grid: Grid) -> float:
    total = 0.0
    for axis, hx in enumerate(grid.h):
        total += float(np.sum((np.diff(v, axis=axis) / hx) ** 2))
    # each interior face owns a dual volume of one cell
    return total * grid.cell_volume


def grad_sq_integral(v: Field) -> float:
    """Discrete Dirichlet energy: sum over interior faces of (dv/h)**2 times
    the face volume. Boundary faces contribute nothing (Neumann)."""
    return grad_sq_integral_array(v.values, v.grid)


def weighted_integral(u: Field, v: Field, p: float, q: float) -> float:
    """int u**p v**q by cellwise powers and midpoint quadrature.

    Raises:
        SingularityError: p < 0 with min(u) <= 0, or q < 0 with min(v) <= 0.
    """
    if p < 0 and not u.min() > 0:
        raise SingularityError(f'u^{p} with min(u) = {u.min():.3g}')
    if q < 0 and not v.min() > 0:
        raise SingularityError(f'v^{q} with min(v) = {v.min():.3g}')
    return integrate_cellwise((u, p), (v, q))


def _relative_log_term(U: np.ndarray) -> np.ndarray:
    """U - 1 - ln U, with log1p near U = 1 and ln U where U - 1 would round to -1."""
    d = U - 1
    near = np.abs(d) < 0.5
    with np.errstate(divide='ignore', invalid='ignore'):
        far = d - np.log(U)
        close = d - np.log1p(np.where(near, d, 0.0))
    return np.where(near, close, far)


def lyapunov_F(state: State, params: Params, L: float) -> float:
    """F = int (U - 1 - ln U) + (L/2) int V**2 with U = mu u / a, V = v - a/mu.

    Raises:
        SingularityError: min(u) <= 0.
    """
    u = state.u.values
    if not u.min() > 0:
        raise SingularityError(f'ln U with min(u) = {u.min():.3g}')
    steady = params.steady
    grid = state.grid
    h_u = integrate_array(_relative_log_term(u / steady), grid)
    return h_u + 0.5 * L * integrate_array((state.v.values - steady) ** 2, grid)


def lyapunov_G(state: State, params: Params, consts: LyapunovConstants) -> float:
    """G = G0 (int (U-1)**2 + (L/2) int V**2)."""
    u = state.u.values
    if not u.min() > 0:
        raise SingularityError(f'G undefined with min(u) = {u.min():.3g}')
    steady = params.steady
    grid = state.grid
    sq_u = integrate_array((u / steady - 1) ** 2, grid)
    sq_v = integrate_array((state.v.values - steady) ** 2, grid)
    return consts.G0 * (sq_u + 0.5 * consts.L * sq_v)


def record_state(state: State, params: Params,
                 spec: DiagnosticsSpec) -> DiagnosticsRecord:
    """Evaluate every monitored functional on one state.

    w_neg and the logarithmic pieces are +inf while u has a zero cell.
    """
    grid = state.grid
    u, v = state.u.values, state.v.values
    steady = params.steady
    U = u / steady
    positive = bool(u.min() > 0)
    w_neg = (weighted_integral(state.u, state.v, -spec.p_neg, -spec.q_neg)
             if positive else math.inf)
    w_pos = weighted_integral(state.u, state.v, spec.kappa, -spec.q0)
    h_u = integrate_array(_relative_log_term(U), grid) if positive else math.inf
    sq_u = integrate_array((U - 1) ** 2, grid)
    sq_v = integrate_array((v - steady) ** 2, grid)
    consts = spec.consts
    return DiagnosticsRecord(
        t=state.t,
        mass_u=integrate_array(u, grid),
        l2_v=integrate_array(v ** 2, grid),
        grad_l2_v=grad_sq_integral_array(v, grid),
        min_v=float(v.min()),
        max_u=float(u.max()),
        linf_u_dev=float(np.abs(u - steady).max()),
        linf_v_dev=float(np.abs(v - steady).max()),
        w_neg=w_neg,
        w_pos=w_pos,
        F=h_u + 0.5 * spec.L * sq_v,
        G=consts.G0 * (sq_u + 0.5 * consts.L * sq_v) if consts else math.nan,
        l2_u=integrate_array(u ** 2, grid),
        lap_l2_v=integrate_array(laplacian_array(v, grid.h) ** 2, grid),
        h_u=h_u,
        sq_u=sq_u,
        sq_v=sq_v,
    )


def records_frame(records: Sequence[DiagnosticsRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.as_row() for r in records],
                        columns=list(COLUMNS + EXTRA_COLUMNS))


def attach_lyapunov(trajectory, consts: LyapunovConstants):
    """Return the trajectory with F and G recomputed from the final constants."""
    records = [r.with_lyapunov(consts) for r in trajectory.records]
    return dataclasses.replace(trajectory, records=records)


###############################################################################
#  CHECKS
###############################################################################

def check_lyapunov_decay(trajectory, consts: LyapunovConstants,
                         slack: float = LYAPUNOV_SLACK,
                         abs_tol: float = LYAPUNOV_ABS_TOL) -> LyapunovReport:
    """Check F(t_k+1) - F(t_k) <= -(1 - slack) G(t_k) dt + abs_tol per interval.

    F and G are rebuilt from the record components with `consts`, so the
    check does not depend on the provisional values stored during the run.
    """
    records = _records(trajectory)
    violations = increases = 0
    worst = math.inf
    for prev, cur in zip(records, records[1:]):
        f_prev, f_cur = prev.functional(consts.L), cur.functional(consts.L)
        allowed = -(1 - slack) * prev.dissipation(consts) * (cur.t - prev.t) + abs_tol
        margin = allowed - (f_cur - f_prev)
        worst = min(worst, margin)
        if not margin >= 0:
            violations += 1
        if f_cur - f_prev > abs_tol:
            increases += 1
    checked = max(len(records) - 1, 0)
    if violations:
        logger.info('Lyapunov decay violated on %d of %d intervals (worst margin %.3g)',
                    violations, checked, worst)
    return LyapunovReport(checked, violations, worst, increases)


def fit_decay_rate(times, values, start_time: Optional[float] = None,
                   floor: Optional[float] = None, min_samples: int = 8) -> float:
    """Least-squares slope of ln(value) against t; returns gamma = -slope.

    Args:
        times, values: The sampled series.
        start_time: Drop samples before this time.
        floor: Stop the window at the first value below `floor` (roundoff
            plateau once the run has converged).
        min_samples: Minimum number of samples left in the window.

    Raises:
        DomainError: Nonpositive value inside the window.
        InsufficientDataError: Fewer than `min_samples` samples.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if start_time is not None:
        keep = t >= start_time
        t, y = t[keep], y[keep]
    if floor is not None:
        below = np.flatnonzero(y < floor)
        if below.size:
            t, y = t[:below[0]], y[:below[0]]
    if t.size < min_samples:
        raise InsufficientDataError(f'{t.size} samples in window, need {min_samples}')
    if not np.all(y > 0) or not np.all(np.isfinite(y)):
        raise DomainError('decay fit needs strictly positive finite values')
    slope = np.polyfit(t, np.log(y), 1)[0]
    return -float(slope)


def fit_trajectory_rates(trajectory, params: Params,
                         consts: Optional[LyapunovConstants],
                         window: DecayWindow = DecayWindow()) -> Dict[str, RateFit]:
    """Fit decay rates of the deviation norms and of F.

    Bounds: G0/(N+2) for the sup norms, G0/2 for the L2 norms, G0 for F.
    """
    records = _records(trajectory)
    series = {
        'linf_u_dev': ([r.linf_u_dev for r in records], 'rate_bound'),
        'linf_v_dev': ([r.linf_v_dev for r in records], 'rate_bound'),
        'l2_u_dev': ([math.sqrt(r.sq_u) for r in records], 'l2_rate_bound'),
        'l2_v_dev': ([math.sqrt(r.sq_v) for r in records], 'l2_rate_bound'),
        'F': ([r.functional(consts.L if consts else 1.0) for r in records],
              'functional_rate_bound'),
    }
    times = [r.t for r in records]
    try:
        start = window.start_time(records, params)
    except InsufficientDataError as e:
        return {name: RateFit(None, None, str(e)) for name in series}
    fits = {}
    for name, (values, bound_name) in series.items():
        bound = getattr(consts, bound_name) if consts else None
        try:
            gamma = fit_decay_rate(times, values, start, window.floor,
                                   window.min_samples)
            fits[name] = RateFit(gamma, bound)
        except (DomainError, InsufficientDataError) as e:
            logger.warning('decay fit of %s failed: %s', name, e)
            fits[name] = RateFit(None, bound, str(e))
    return fits


def estimate_eta0(trajectory) -> EtaEstimate:
    """Smallest sampled min(v) and the time it was attained."""
    records = _records(trajectory)
    if not records:
        raise InsufficientDataError('empty trajectory')
    best = min(records, key=lambda r: r.min_v)
    return EtaEstimate(best.min_v, best.t)


def mass_bound(params: Params, grid: Grid, mass0: float) -> float:
    """max(mass0, a |Omega| / mu), implied by d/dt M <= a M - mu M^2 / |Omega|."""
    return max(mass0, params.a * grid.measure / params.mu)


def check_mass_bound(trajectory, params: Params, grid: Grid,
                     rel_tol: float = MASS_REL_TOL) -> MassReport:
    records = _records(trajectory)
    bound = mass_bound(params, grid, records[0].mass_u)
    ratios = [r.mass_u / bound for r in records]
    violations = sum(1 for x in ratios if x > 1 + rel_tol)
    return MassReport(bound, violations, max(ratios))


def windowed_dissipation_sup(trajectory, width: float = 1.0) -> float:
    """sup_t of int_{(t-width)+}^t (int|grad v|^2 + int u^2 + int|lap v|^2) ds."""
    records = _records(trajectory)
    t = np.array([r.t for r in records])
    q = np.array([r.grad_l2_v + r.l2_u + r.lap_l2_v for r in records])
    best = 0.0
    for k in range(1, t.size):
        keep = (t >= t[k] - width) & (t <= t[k])
        best = max(best, float(trapezoid(q[keep], t[keep])))
    return best


def check_log_comparison(trajectory, params: Params,
                         delta: float = DECAY_DELTA) -> LogComparisonReport:
    """On samples with ||U-1||_inf < delta check
    (1/3) int (U-1)^2 <= int (U-1-ln U) <= (2/3) int (U-1)^2."""
    records = _records(trajectory)
    scale = params.mu / params.a
    checked = violations = 0
    for r in records:
        if not scale * r.linf_u_dev < delta:
            continue
        checked += 1
        # absorbs the cancellation in d - log1p(d) for tiny d
        tol = 1e-13 * math.sqrt(r.sq_u)
        if not (r.sq_u / 3 - tol <= r.h_u <= 2 * r.sq_u / 3 + tol):
            violations += 1
    return LogComparisonReport(checked, violations)
