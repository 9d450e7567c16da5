"""Exception hierarchy shared by all modules.

Everything derives from ``ValidationError`` or ``ComputationError`` so the CLI
can map failures to exit codes without knowing module internals.
"""

from __future__ import annotations

__all__ = [
    "SbeError",
    "ValidationError",
    "CoverageError",
    "BudgetError",
    "ComputationError",
    "ConvergenceError",
    "DivergenceError",
]


class SbeError(Exception):
    """Base class for library errors."""


class ValidationError(SbeError, ValueError):
    """An input violates a documented precondition or type invariant."""


class CoverageError(ValidationError):
    """A quadrature grid does not cover the region it must cover."""


class BudgetError(ValidationError):
    """Regularity exponents violate the integrability budget.

    ``inequality`` names the violated condition so callers can report it.
    """

    def __init__(self, inequality: str, detail: str):
        super().__init__(f"regularity budget violated: {inequality} ({detail})")
        self.inequality = inequality
        self.detail = detail


class ComputationError(SbeError, RuntimeError):
    """A numerical procedure failed after its inputs were accepted."""


class ConvergenceError(ComputationError):
    """An iteration hit its limit; ``history`` carries the diagnostics."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = history


class DivergenceError(ComputationError):
    """Refinement differences do not decay."""

    def __init__(self, message: str, worst=None):
        super().__init__(message)
        self.worst = worst
