"""Exception hierarchy shared by the solver stages."""

from __future__ import annotations


class PhaseAmpError(Exception):
    """Base class for every error raised by :mod:`phaseamp`."""


class DomainError(PhaseAmpError, ValueError):
    """An argument lies outside the domain of a function (r <= 0, Y <= 0, ...)."""


class ConfigurationError(PhaseAmpError, ValueError):
    """Inconsistent solver parameters, e.g. ``r_min >= r_pi``."""


class ConvergenceError(PhaseAmpError, RuntimeError):
    """An iterative procedure exhausted its iteration budget."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SingularMatrixError(PhaseAmpError, ArithmeticError):
    """The collocation matrix of an element could not be factorised."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class StageError(PhaseAmpError):
    """Wraps a failure inside one stage of the continuum-state pipeline."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
