"""Exception hierarchy shared across the package.

Each class carries a process exit code so the command line tool can
translate failures uniformly.
"""

from __future__ import annotations


class WardropError(Exception):
    """Base class for all package errors."""


class InputError(WardropError):
    """Malformed or out-of-contract input (bad file, bad parameter range)."""

    exit_code = 2


class RefusalError(InputError):
    """Request exceeds a hard resource cap; carries the cap in the message."""


class ConvergenceError(WardropError):
    """An iterative solver stopped without meeting its tolerance."""

    exit_code = 3

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class InvariantError(WardropError):
    """A structural or mathematical invariant failed to hold."""

    exit_code = 4
