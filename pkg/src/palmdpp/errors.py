"""Exception hierarchy.

Two families matter for the CLI exit-code contract: configuration and
precondition problems (exit 2) versus numerical failures discovered during
computation (exit 3). Statistical verdict failures are not exceptions; they
are reported in experiment verdicts and mapped to exit 1 by the CLI.
"""


class PalmDppError(Exception):
    """Base class for all package errors."""


class ConfigError(PalmDppError):
    """Invalid configuration, argument, or violated precondition."""


class DegenerateInputError(ConfigError):
    """Inputs that make the requested operation singular (duplicate points,
    coinciding zeros and poles, mismatched anchor orders)."""


class UnsupportedWeightError(ConfigError):
    """Weight outside the supported (radial) family for this operation."""


class NumericalError(PalmDppError):
    """Numerical failure during an otherwise well-posed computation."""


class QuadratureError(NumericalError):
    """Quadrature did not converge to the requested tolerance."""


class DomainError(NumericalError):
    """Point evaluated outside the model domain (e.g. |z| >= 1 on the disc)."""


class EnvelopeError(NumericalError):
    """Rejection-sampling envelope failed (violation or vanishing acceptance).

    Carries diagnostics to help identify the offending radius/cell.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EvaluationError(NumericalError):
    """A functional was evaluated where it is not finite (pole hit a point)."""
