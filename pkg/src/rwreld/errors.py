"""Exception taxonomy shared across modules.

The CLI maps ValidationError to exit code 2 and ConvergenceError /
WindowExhaustedError to exit code 3.
"""

from __future__ import annotations


class RwreError(Exception):
    """Base class for all package errors."""


class ValidationError(RwreError):
    """Invalid parameters or violated preconditions."""


class WindowCoverageError(ValidationError):
    """An operation needs sites outside the environment window."""


class DegenerateValleyError(ValidationError):
    """The potential has no proper valley to the right of the origin."""


class WindowExhaustedError(RwreError):
    """A simulated walk left the sampled window (never silently reflected)."""

    def __init__(self, message: str, count: int = 1):
        super().__init__(message)
        self.count = count


class ConvergenceError(RwreError):
    """An iterative evaluation failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved
