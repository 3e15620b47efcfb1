"""Exceptions raised by the simulator and verification harness."""


class ChemotaxisError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ChemotaxisError, ValueError):
    """An argument lies outside the domain of an operation."""


class ThresholdError(ChemotaxisError):
    """mu does not strictly exceed the Lyapunov threshold."""


class InfeasibleError(ChemotaxisError):
    """A parameter window that must be nonempty is empty."""


class EmptyWindowError(ChemotaxisError):
    """The q2 exponent window is empty (p * chi**2 >= 1)."""


class UndefinedWindowError(ChemotaxisError):
    """The p_g window has a negative discriminant."""


class SingularityError(ChemotaxisError):
    """A zero or negative base meets a negative power, a log or 1/v."""


class EvaluationError(ChemotaxisError):
    """A quadrature integrand is not finite."""


class InsufficientDataError(ChemotaxisError):
    """Too few usable samples for a fit."""


class AdmissibilityError(ChemotaxisError):
    """Initial data violate u0 >= 0, u0 not identically 0, v0 > 0."""


class OracleError(ChemotaxisError):
    """A reference computation did not converge."""


class ConfigError(ChemotaxisError):
    """Configuration file is missing or invalid."""


class StepRejected(ChemotaxisError):
    """A candidate RK4 step failed one of the integrator guards."""

    def __init__(self, guard, detail=''):
        self.guard = guard
        self.detail = detail
        super().__init__(f'{guard.value}: {detail}' if detail else guard.value)
