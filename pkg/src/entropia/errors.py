"""Exception hierarchy shared across the package."""


class EntropiaError(Exception):
    """Base class for all package errors."""


class ParameterError(EntropiaError, ValueError):
    """A constructor or operation received an out-of-range parameter."""


class NumericEscape(EntropiaError, ArithmeticError):
    """An orbit produced a non-finite coordinate."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"numeric escape at step {step}")


class NoJetAvailable(EntropiaError):
    """The system has no differentiable closed form."""


class NoComplexExtension(EntropiaError):
    """The system carries no complex extension."""


class ResolutionInsufficient(EntropiaError):
    """The grid is too coarse for the requested scale."""


class ScaleTooSmall(EntropiaError):
    """C_n is too small for the log-log term to be defined."""


class PreconditionError(EntropiaError, ValueError):
    """An operation's precondition does not hold."""


class ConfigError(EntropiaError, ValueError):
    """An experiment or system config could not be parsed or validated."""
