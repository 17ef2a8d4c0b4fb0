"""Exception hierarchy.

Every error carries an optional ``diagnostics`` dict so the CLI can dump it
as JSON on numerical failure.
"""

from __future__ import annotations


class FraclabError(Exception):
    """Base class for all package errors."""

    exit_code = 3

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(FraclabError, ValueError):
    exit_code = 2


class InvalidOrder(ConfigError):
    """Fractional order outside (0, 1)."""


class GridTooCoarse(FraclabError):
    pass


class TooManyNodes(FraclabError):
    pass


class TooLarge(FraclabError):
    """Perturbation field with C1 bound >= 1."""


class NotStarShaped(FraclabError):
    pass


class BudgetExceeded(FraclabError):
    pass


class IndefiniteForm(FraclabError):
    pass


class NonPositiveWeight(FraclabError):
    pass


class CholeskyFailure(FraclabError):
    pass


class TrackingAmbiguous(FraclabError):
    pass


class FitUnstable(FraclabError):
    pass


class NoSplittingCandidate(FraclabError):
    pass


class AmplitudeExhausted(FraclabError):
    pass


class MaxIterations(FraclabError):
    pass
