"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside its admissible range."""


class ContractViolationError(ValueError):
    """An input violates a documented precondition (e.g. unnormalized state)."""


class DegenerateOutcomeError(ArithmeticError):
    """A measurement branch annihilated the state (norm underflowed to zero)."""


class BinOverflowError(ArithmeticError):
    """A probe vector collapsed inside a bin; retry with a smaller bin size."""


class RankDeficiencyError(ArithmeticError):
    """Probe vectors became linearly dependent during orthonormalization."""


class InsufficientLogError(ValueError):
    """A trajectory log holds fewer steps than requested."""


class UnderdeterminedFitError(ValueError):
    """Too few system sizes to fit the finite-size extrapolation."""


class DegenerateSeriesError(ValueError):
    """Gap series admits no valid fit domain on the sweep grid."""


class BrokenChannelError(ArithmeticError):
    """A trace-preserving channel reported no unit eigenvalue."""


class SizeLimitError(ValueError):
    """Requested dense object exceeds the configured memory guard."""


class ConfigError(ValueError):
    """Experiment configuration failed validation."""


class StaleEstimateWarning(UserWarning):
    """A quantity was read before its convergence flag was set."""
