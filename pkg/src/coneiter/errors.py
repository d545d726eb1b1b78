"""Exception types shared across the package."""

from __future__ import annotations


class ConeIterError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ConeIterError, ValueError):
    """A schedule, config file, or parameter set violates its contract."""


class DivergenceError(ConeIterError, RuntimeError):
    """An iteration produced a non-finite iterate or an exploding step.

    The partial trace recorded up to the failing step is attached as
    ``trace`` so the run can still be inspected.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InversionError(ConeIterError, RuntimeError):
    """A supplied right inverse failed its round-trip check."""


class MissingAuxError(ConeIterError, ValueError):
    """An analysis mode needs auxiliary step values the trace did not keep."""


class PreconditionError(ConeIterError, RuntimeError):
    """A theorem-level precondition check failed; ``report`` has details."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
