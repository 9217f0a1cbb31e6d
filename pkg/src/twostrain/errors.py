"""Exception hierarchy shared by all modules."""


class TwoStrainError(Exception):
    """Base class for errors raised by this package."""


class DomainError(TwoStrainError):
    """Input outside the mathematical domain of an operation."""


class UnsupportedLimitError(DomainError):
    """A custom incidence rate has no usable F(S,I)/I limit at I=0."""


class ConfigError(TwoStrainError):
    """Invalid scenario configuration. The message lists every offending key."""


class PreconditionError(TwoStrainError):
    """A documented precondition was violated, e.g. a stale equilibrium."""


class SolverError(TwoStrainError):
    """A root or fixed-point solve failed in a way theory says it should not."""


class IntegrationError(TwoStrainError):
    """Adaptive step size underflowed. Carries the last good state."""

    def __init__(self, message, last_time=None, last_state=None):
        super().__init__(message)
        self.last_time = last_time
        self.last_state = last_state
