"""Exception hierarchy shared across the toolkit.

Validation errors map to CLI exit code 1, runtime errors to exit code 2.
"""

from __future__ import annotations


class SumctlError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SumctlError, ValueError):
    """Bad input: malformed files, out-of-range parameters, empty axes."""


class ConfigurationError(SumctlError):
    """Missing or inconsistent configuration, e.g. an absent API key."""


class ConvergenceError(SumctlError):
    """Iterative solver exceeded its iteration budget."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class GenerationError(SumctlError):
    """A backend could not produce a summary for a document."""


class RequestError(SumctlError):
    """Non-retryable HTTP failure; carries status code and a body excerpt."""

    def __init__(self, message: str, status: int, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body[:500]


class TransportError(SumctlError):
    """Retries exhausted or the endpoint was unreachable."""


class SweepError(SumctlError):
    """Too many documents were skipped during a sweep; partial results attached."""

    def __init__(self, message: str, records=None, skipped=None):
        super().__init__(message)
        self.records = records or []
        self.skipped = skipped or []
