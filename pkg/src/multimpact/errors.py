"""Error types shared across the impact-resolution pipeline."""

from __future__ import annotations

__all__ = [
    "MultimpactError",
    "LcpSolveError",
    "ConeViolationError",
    "NonDegeneracyViolation",
    "SequentialCapExceeded",
]


class MultimpactError(Exception):
    """Base class for solver-level failures."""


class LcpSolveError(MultimpactError):
    """The complementarity solver did not return a certified solution."""

    def __init__(self, status: str, detail: str = ""):
        self.status = status
        message = f"LCP solve failed with status {status!r}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class ConeViolationError(MultimpactError):
    """A computed post-impact state failed the friction-cone audit."""


class NonDegeneracyViolation(MultimpactError):
    """No strictly separating impulse-progress certificate exists: some
    nonnegative combination of contact impulse rays produces no velocity
    change (the contact geometry can jam)."""


class SequentialCapExceeded(MultimpactError):
    """One-contact-at-a-time resolution did not settle within the cap."""
