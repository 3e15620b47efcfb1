"""Model parameters and the closed-form constants derived from them.

Every function here is a pure, total function of its arguments (apart from
the documented domain errors), so it is safe to call from any thread.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .errors import (DomainError, EmptyWindowError, InfeasibleError,
                     ThresholdError, UndefinedWindowError)

logger = logging.getLogger(__name__)


###############################################################################
#  TYPES
###############################################################################

@dataclass(frozen=True)
class Params:
    """The model tuple (a, mu, chi, N).

    Args:
        a: Growth rate of the logistic source.
        mu: Logistic damping.
        chi: Chemotactic sensitivity.
        dim: Spatial dimension N.
        degenerate: Relax a, mu, chi to >= 0. Used by validation modes such
            as transport-only conservation runs; never admissible for the
            boundedness and convergence checks.
    """
    a: float
    mu: float
    chi: float
    dim: int = 1
    degenerate: bool = False

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise DomainError(f'dim must be an integer >= 1, got {self.dim!r}')
        for name in ('a', 'mu', 'chi'):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f'{name} must be finite, got {value!r}')
            if self.degenerate:
                if value < 0:
                    raise DomainError(f'{name} must be >= 0, got {value!r}')
            elif value <= 0:
                raise DomainError(f'{name} must be > 0, got {value!r}')

    @property
    def steady(self) -> float:
        """The constant steady state a/mu shared by u and v."""
        if self.mu <= 0:
            raise DomainError('steady state a/mu undefined for mu = 0')
        return self.a / self.mu

    def require_strict(self):
        if self.degenerate:
            raise DomainError('degenerate parameters are not admissible here')


@dataclass(frozen=True)
class Interval:
    """Open real interval (lower, upper); empty when lower >= upper."""
    lower: float
    upper: float

    @property
    def is_empty(self) -> bool:
        return not self.lower < self.upper

    @property
    def width(self) -> float:
        return max(0.0, self.upper - self.lower)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: float) -> bool:
        return self.lower < x < self.upper

    def intersect(self, other: 'Interval') -> 'Interval':
        return Interval(max(self.lower, other.lower),
                        min(self.upper, other.upper))

    def as_list(self):
        return [self.lower, self.upper]


UNIT_INTERVAL = Interval(0.0, 1.0)


@dataclass(frozen=True)
class ConditionReport:
    cond_a_ok: bool
    cond_chi_ok: bool
    margin_a: float
    margin_chi: float

    @property
    def hypotheses_met(self) -> bool:
        return self.cond_a_ok and self.cond_chi_ok

    def as_dict(self):
        return {'cond_a_ok': self.cond_a_ok, 'cond_chi_ok': self.cond_chi_ok,
                'margin_a': self.margin_a, 'margin_chi': self.margin_chi,
                'hypotheses_met': self.hypotheses_met}


@dataclass(frozen=True)
class PGWindow:
    """The p_g window and its intersection with (0, 1)."""
    window: Interval
    unit: Interval


@dataclass(frozen=True)
class KappaSelection:
    kappa: float
    q0: float
    kappa_window: Interval
    q0_window: Interval
    # N = 1 lies outside the N >= 2 range of the recipe; flagged.
    extended: bool = False


@dataclass(frozen=True)
class LyapunovConstants:
    k0: float
    L_window: Interval
    L: float
    G0: float
    mu_threshold: float
    rate_bound: float
    dim: int = 1
    # both arguments of the min defining G0; unequal when L sits on a window edge
    branches: Tuple[float, float] = (math.nan, math.nan)
    clamped: bool = False

    @property
    def l2_rate_bound(self) -> float:
        """Rate bound for ||U-1||_2 and ||V||_2 (half the F rate)."""
        return 0.5 * self.G0

    @property
    def functional_rate_bound(self) -> float:
        return self.G0

    def as_dict(self):
        return {'k0': self.k0, 'L': self.L, 'L_window': self.L_window.as_list(),
                'G0': self.G0, 'mu_threshold': self.mu_threshold,
                'rate_bound': self.rate_bound,
                'G0_branches': list(self.branches), 'L_clamped': self.clamped}


@dataclass(frozen=True)
class ExponentWindows:
    """Exponent windows for the weighted integrals of a parameter set.

    `p_neg`/`q_neg` are the exponents monitored by w_neg = int u^-p v^-q,
    `kappa`/`q0` those of w_pos = int u^kappa v^-q0 (None when infeasible).
    """
    chi: float
    p_g_range: Optional[PGWindow]
    p_neg: float
    q_neg: float
    selection: Optional[KappaSelection] = field(default=None)

    @property
    def kappa(self) -> Optional[float]:
        return self.selection.kappa if self.selection else None

    @property
    def q0(self) -> Optional[float]:
        return self.selection.q0 if self.selection else None

    def q1_plus(self, p: float) -> float:
        return q1_plus(p, self.chi)

    def q2_range(self, p: float) -> Interval:
        return q2_range(p, self.chi)


###############################################################################
#  CONDITIONS AND EXPONENT WINDOWS
###############################################################################

def check_boundedness_conditions(params: Params) -> ConditionReport:
    """Evaluate the boundedness hypotheses on (a, chi) and (chi, N).

    a must exceed chi**2/4 when chi <= 2 and chi - 1 when chi > 2; for N >= 2
    chi must stay below sqrt(2/N). All comparisons are strict.
    """
    params.require_strict()
    a, chi = params.a, params.chi
    threshold = chi ** 2 / 4 if chi <= 2 else chi - 1
    margin_a = a - threshold
    if params.dim == 1:
        margin_chi = math.inf
        cond_chi_ok = True
    else:
        margin_chi = math.sqrt(2 / params.dim) - chi
        cond_chi_ok = margin_chi > 0
    return ConditionReport(margin_a > 0, cond_chi_ok, margin_a, margin_chi)


def q1_plus(p: float, chi: float) -> float:
    """Lower edge (p+1)/2 (sqrt(1 + p chi**2) - 1) of the q window for p in (0, 1)."""
    if not 0 < p < 1:
        raise DomainError(f'p must lie in (0, 1), got {p!r}')
    if not chi > 0:
        raise DomainError(f'chi must be > 0, got {chi!r}')
    x = p * chi ** 2
    # sqrt(1+x) - 1 written as x / (sqrt(1+x) + 1) to keep small p exact
    return 0.5 * (p + 1) * x / (math.sqrt(1 + x) + 1)


def p_g_range(a: float, chi: float) -> PGWindow:
    """Return (p_g-, p_g+) and its intersection with (0, 1).

    Raises:
        UndefinedWindowError: (1+a)**2 < chi**2. A zero discriminant yields
            the empty window (p, p) instead.
    """
    if not (a > 0 and chi > 0):
        raise DomainError(f'a and chi must be > 0, got a={a!r}, chi={chi!r}')
    disc = (1 + a) ** 2 - chi ** 2
    if disc < 0:
        raise UndefinedWindowError(
            f'(1+a)^2 - chi^2 = {disc:.6g} < 0 for a={a}, chi={chi}')
    base = 2 * a ** 2 + 2 * a - chi ** 2
    root = 2 * a * math.sqrt(disc)
    window = Interval((base - root) / chi ** 2, (base + root) / chi ** 2)
    return PGWindow(window, window.intersect(UNIT_INTERVAL))


def q2_range(p: float, chi: float) -> Interval:
    """Return the window (q2-(p), q2+(p)) for p > 1 and p chi**2 < 1."""
    if not p > 1:
        raise DomainError(f'p must be > 1, got {p!r}')
    if not chi > 0:
        raise DomainError(f'chi must be > 0, got {chi!r}')
    x = p * chi ** 2
    if x >= 1:
        raise EmptyWindowError(f'p chi^2 = {x:.6g} >= 1')
    s = math.sqrt(1 - x)
    half = 0.5 * (p - 1)
    # 1 - sqrt(1-x) == x / (1 + sqrt(1-x))
    return Interval(half * x / (1 + s), half * (1 + s))


def select_kappa_q0(params: Params) -> KappaSelection:
    """Pick kappa > N/2 and q0 in q2_range(kappa) within (0, N/2).

    kappa is the midpoint of (max(N/2, 1), 1/chi**2); q0 the midpoint of
    q2_range(kappa) intersected with (0, N/2). N = 1 uses the same recipe
    and is flagged as extended.
    """
    n, chi = params.dim, params.chi
    if n >= 2 and not chi < math.sqrt(2 / n):
        raise InfeasibleError(f'chi={chi} >= sqrt(2/N) for N={n}')
    upper = 1 / chi ** 2
    lower = max(n / 2, 1.0)
    if not lower < upper:
        raise InfeasibleError(
            f'kappa window ({lower:.6g}, {upper:.6g}) is empty for chi={chi}')
    kappa = 0.5 * (lower + upper)
    q0_window = q2_range(kappa, chi).intersect(Interval(0.0, n / 2))
    if q0_window.is_empty:
        raise InfeasibleError(f'q0 window empty for kappa={kappa:.6g}')
    return KappaSelection(kappa, q0_window.midpoint, Interval(lower, upper),
                          q0_window, extended=n < 2)


def exponent_windows(params: Params) -> ExponentWindows:
    """Collect the exponent windows and the default w_neg / w_pos exponents."""
    chi = params.chi
    try:
        pg = p_g_range(params.a, chi)
    except UndefinedWindowError as e:
        logger.warning('p_g window undefined (%s); w_neg uses p=0.5', e)
        pg = None
    if pg is not None and not pg.unit.is_empty:
        p_neg = pg.unit.midpoint
    else:
        p_neg = 0.5
    q_neg = 1.1 * q1_plus(p_neg, chi)
    try:
        selection = select_kappa_q0(params)
    except InfeasibleError as e:
        logger.warning('no admissible (kappa, q0): %s', e)
        selection = None
    return ExponentWindows(chi, pg, p_neg, q_neg, selection)


###############################################################################
#  LYAPUNOV CONSTANTS
###############################################################################

def g0_branches(params: Params, k0: float, L: float):
    """The two arguments of the min defining G0."""
    a, mu, chi = params.a, params.mu, params.chi
    return a - 0.5 * L * (a / mu) ** 2, L - chi ** 2 * k0 / 4


def lyapunov_constants(params: Params, eta0: float,
                       L_choice: Optional[float] = None) -> LyapunovConstants:
    """Form k0, the L window, L, G0 and the rate bound G0/(N+2).

    Args:
        params: Strict model parameters.
        eta0: Positive lower bound of v (measured or user supplied).
        L_choice: Weight of int V**2; defaults to the G0-maximizing value
            (a + chi**2 k0/4) / (1 + a**2/(2 mu**2)) that equalizes the two
            branches of G0.

    When the balancing L falls outside the window it is clamped to the
    nearest interior float. The two branches then differ and G0 is the
    smaller one; both are kept on the result as `branches`.

    Raises:
        ThresholdError: mu <= max(1, a chi k0 sqrt(2)/4).
        InfeasibleError: Empty L window or G0 <= 0.
        DomainError: eta0 <= 0 or L_choice outside the window.
    """
    params.require_strict()
    if not (eta0 > 0 and math.isfinite(eta0)):
        raise DomainError(f'eta0 must be a positive finite number, got {eta0!r}')
    a, mu, chi = params.a, params.mu, params.chi
    k0 = 1 / eta0 ** 2
    mu_threshold = max(1.0, a * chi * k0 * math.sqrt(2) / 4)
    if not mu > mu_threshold:
        raise ThresholdError(
            f'mu={mu} does not exceed threshold {mu_threshold:.6g} (k0={k0:.6g})')
    window = Interval(chi ** 2 * k0 / 4, 2 * mu ** 2 / a ** 2)
    if window.is_empty:
        raise InfeasibleError(
            f'L window ({window.lower:.6g}, {window.upper:.6g}) is empty')
    clamped = False
    if L_choice is None:
        L = (a + window.lower) / (1 + a ** 2 / (2 * mu ** 2))
        if L >= window.upper:
            # G0 increases across the whole window; take its last float
            L = math.nextafter(window.upper, window.lower)
            clamped = True
        elif L <= window.lower:
            L = math.nextafter(window.lower, window.upper)
            clamped = True
    else:
        if not window.contains(L_choice):
            raise DomainError(
                f'L={L_choice} outside ({window.lower:.6g}, {window.upper:.6g})')
        L = L_choice
    branches = g0_branches(params, k0, L)
    G0 = min(branches)
    if not G0 > 0:
        raise InfeasibleError(f'G0={G0:.6g} is not positive')
    return LyapunovConstants(k0, window, L, G0, mu_threshold,
                             G0 / (params.dim + 2), params.dim, branches, clamped)
