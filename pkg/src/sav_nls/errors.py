"""Exception hierarchy shared by all solver components."""


class SavNlsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SavNlsError):
    """Invalid discretization or scheme parameters."""


class InputError(SavNlsError):
    """Invalid runtime data (out-of-domain point, non-finite sample, ...)."""


class ModelError(SavNlsError):
    """Nonlinearity/auxiliary-variable violation (nonpositive radicand, ...)."""


class SolverError(SavNlsError):
    """Linear algebra failure (singular factorization, degenerate coupling)."""


class StepError(SavNlsError):
    """Time-step failure; carries the Newton increment history."""

    def __init__(self, message, increment_history=None, failed_slab=None):
        super().__init__(message)
        self.increment_history = list(increment_history or [])
        self.failed_slab = failed_slab


class UsageError(SavNlsError):
    """Bad command line or configuration file input."""
