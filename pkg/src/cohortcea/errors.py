"""Exception types shared across the package."""

from __future__ import annotations


class CohortModelError(Exception):
    """Base class for all package-specific errors."""


class StructureError(CohortModelError):
    """Shape or labeling mismatch between model components.

    Raised when matrices, traces, or reward structures do not agree
    dimensionally with a state space or with each other. Distinct from
    probability-value violations, which are reported by validation.
    """


class ValidationError(CohortModelError):
    """A transition model failed probability validation.

    Carries the list of :class:`~cohortcea.core.Violation` records that
    triggered the failure.
    """

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations is not None else []


class NumericError(CohortModelError):
    """Non-finite values appeared during a computation.

    ``cycle`` identifies the first simulation cycle at which the
    problem was detected, when applicable.
    """

    def __init__(self, message: str, cycle: int | None = None):
        super().__init__(message)
        self.cycle = cycle


class LifeTableError(CohortModelError):
    """Life-table ingestion or lookup failure."""


class ConfigError(CohortModelError):
    """Model configuration could not be parsed or resolved.

    ``problems`` lists every resolution error found, not just the first.
    """

    def __init__(self, message: str, problems=None):
        super().__init__(message)
        self.problems = list(problems) if problems is not None else [message]


class PsaEvaluationError(CohortModelError):
    """A PSA model evaluation failed; ``row`` is the offending sample index."""

    def __init__(self, message: str, row: int):
        super().__init__(message)
        self.row = row
