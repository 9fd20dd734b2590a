"""Numeric tolerances used by every solver and verifier.

All arithmetic is double precision.  Equality-style checks use a relative
tolerance ``tau_rel`` (default 1e-9, overridable through the WARDROP_TOL
environment variable) with an absolute floor ``TAU_ABS`` (1e-12).
"""

from __future__ import annotations

import os

from .errors import InputError

TAU_REL_DEFAULT = 1e-9
TAU_ABS = 1e-12

ENV_TOL = "WARDROP_TOL"


def tau_rel() -> float:
    """Current relative tolerance; reads WARDROP_TOL when set."""
    raw = os.environ.get(ENV_TOL)
    if raw is None:
        return TAU_REL_DEFAULT
    try:
        value = float(raw)
    except ValueError as exc:
        raise InputError(f"{ENV_TOL} must be a float, got {raw!r}") from exc
    if not value > 0.0:
        raise InputError(f"{ENV_TOL} must be positive, got {value}")
    return value


def close_leq(lhs: float, rhs: float, *, atol: float = TAU_ABS, rtol: float = 0.0) -> bool:
    """lhs <= rhs up to the mixed tolerance atol + rtol*|rhs|."""
    return lhs <= rhs + atol + rtol * abs(rhs)
