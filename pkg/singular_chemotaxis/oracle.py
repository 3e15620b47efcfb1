"""Reference solutions used to validate the solver.

Nothing here imports grid_ops: the tiny-grid rhs is re-derived by explicit
enumeration of faces so that an operator bug cannot hide in both places.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError, OracleError
from .model_core import Params

logger = logging.getLogger(__name__)

QUAD_EPSREL = 1e-12
QUAD_EPSABS = 1e-14
TINY_GRID_MAX_CELLS = 8


@dataclass(frozen=True)
class HomogeneousSolution:
    """Spatially constant solution of the system; Delta u = Delta v = 0."""
    u0: float
    v0: float
    a: float
    mu: float

    def __post_init__(self):
        if not (self.u0 >= 0 and self.v0 > 0):
            raise DomainError(f'need u0 >= 0 and v0 > 0, got {self.u0}, {self.v0}')
        if not (self.a > 0 and self.mu > 0):
            raise DomainError(f'need a, mu > 0, got {self.a}, {self.mu}')

    def u(self, t: float) -> float:
        return logistic_exact(self.u0, self.a, self.mu, t)

    def v(self, t: float) -> float:
        return homogeneous_v_exact(self.u0, self.v0, self.a, self.mu, t)


def logistic_exact(u0: float, a: float, mu: float, t: float) -> float:
    """Closed form a u0 e^{at} / (a + mu u0 (e^{at} - 1)) of u' = a u - mu u**2."""
    if not (u0 >= 0 and a > 0 and mu > 0):
        raise DomainError(f'need u0 >= 0, a > 0, mu > 0, got {u0}, {a}, {mu}')
    if t < 0:
        raise DomainError(f't must be >= 0, got {t}')
    if u0 == 0:
        return 0.0
    if u0 == a / mu:
        return a / mu
    # divide through by e^{at}; finite for every t
    decay = math.exp(-a * t)
    return a * u0 / (a * decay - mu * u0 * math.expm1(-a * t))


def homogeneous_v_exact(u0: float, v0: float, a: float, mu: float, t: float) -> float:
    """v(t) = v0 e^{-t} + int_0^t e^{-(t-s)} u(s) ds by adaptive quadrature.

    Raises:
        OracleError: The quadrature reports it did not reach the tolerance.
    """
    if not v0 > 0:
        raise DomainError(f'v0 must be > 0, got {v0}')
    if t < 0:
        raise DomainError(f't must be >= 0, got {t}')
    if u0 == 0:
        return v0 * math.exp(-t)
    if u0 == v0 == a / mu:
        return a / mu
    if t == 0:
        return v0

    def integrand(s):
        return math.exp(s - t) * logistic_exact(u0, a, mu, s)

    with warnings.catch_warnings():
        warnings.simplefilter('error', IntegrationWarning)
        try:
            value, err = quad(integrand, 0.0, t, epsabs=QUAD_EPSABS,
                              epsrel=QUAD_EPSREL, limit=200)
        except IntegrationWarning as e:
            raise OracleError(f'quadrature did not converge: {e}') from e
    logger.debug('homogeneous v quadrature t=%g err=%.3g', t, err)
    return v0 * math.exp(-t) + value


def tiny_grid_rhs_oracle(u: Sequence[float], v: Sequence[float], params: Params,
                         h: float = 1.0) -> Tuple[List[float], List[float]]:
    """rhs of the 1D system on at most 8 cells, one face at a time.

    Face i+1/2 carries chi * ((u_i + u_i+1)/2) / ((v_i + v_i+1)/2) * (v_i+1 - v_i)/h;
    the two boundary faces carry nothing.
    """
    n = len(u)
    if n != len(v) or not 2 <= n <= TINY_GRID_MAX_CELLS:
        raise DomainError(f'need 2..{TINY_GRID_MAX_CELLS} cells in u and v, got {len(u)}, {len(v)}')
    u = [float(x) for x in u]
    v = [float(x) for x in v]
    if min(v) <= 0:
        raise DomainError('v must be positive')

    faces = [0.0]
    for i in range(n - 1):
        u_face = 0.5 * (u[i] + u[i + 1])
        v_face = 0.5 * (v[i] + v[i + 1])
        faces.append(params.chi * (u_face / v_face) * (v[i + 1] - v[i]) / h)
    faces.append(0.0)

    du, dv = [], []
    for i in range(n):
        left = i - 1 if i > 0 else i
        right = i + 1 if i < n - 1 else i
        lap_u = (u[right] - 2 * u[i] + u[left]) / h ** 2
        lap_v = (v[right] - 2 * v[i] + v[left]) / h ** 2
        transport = (faces[i + 1] - faces[i]) / h
        du.append(lap_u - transport + params.a * u[i] - params.mu * (u[i] * u[i]))
        dv.append(lap_v - v[i] + u[i])
    return du, dv
