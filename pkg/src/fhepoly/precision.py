"""Extended-precision arithmetic context built on mpmath.

All polynomial construction runs on mpmath floats under an explicit binary
precision. The default is 300 mantissa bits; anything below 128 bits is
rejected because the certification margins assume a generous headroom over
the convergence tolerance. High-degree runs raise the working precision
automatically (see :func:`resolve_precision`).
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import mpmath
from mpmath import mpf

DEFAULT_PRECISION_BITS = 300
MIN_PRECISION_BITS = 128
PRECISION_ENV_VAR = "FHEPOLY_PRECISION_BITS"

# Degree above which the default precision is scaled up with the degree.
_HIGH_DEGREE_THRESHOLD = 75


def default_precision() -> int:
    """Default mantissa bits, overridable through FHEPOLY_PRECISION_BITS."""
    raw = os.environ.get(PRECISION_ENV_VAR)
    if raw is None:
        return DEFAULT_PRECISION_BITS
    try:
        bits = int(raw)
    except ValueError as exc:
        raise ValueError(f"{PRECISION_ENV_VAR} must be an integer, got {raw!r}") from exc
    validate_precision(bits)
    return bits


def validate_precision(bits: int) -> int:
    if bits < MIN_PRECISION_BITS:
        raise ValueError(f"precision must be at least {MIN_PRECISION_BITS} bits, got {bits}")
    return bits


def resolve_precision(bits: int | None, degree: int | None = None) -> int:
    """Pick the working precision for a computation.

    Explicit ``bits`` wins. Otherwise the default applies, scaled to
    ``4 * degree`` for degrees above 75 where the exchange systems become
    too ill-conditioned for a fixed precision.
    """
    if bits is not None:
        return validate_precision(bits)
    base = default_precision()
    if degree is not None and degree > _HIGH_DEGREE_THRESHOLD:
        return max(base, 4 * degree)
    return base


@contextmanager
def workbits(bits: int):
    """Run a block under ``bits`` mantissa bits of mpmath precision."""
    validate_precision(bits)
    with mpmath.workprec(bits):
        yield


def to_mpf(x, name: str = "value") -> mpf:
    """Convert to mpf, rejecting NaN and infinities."""
    v = mpf(x) if not isinstance(x, mpf) else x
    if not mpmath.isfinite(v):
        raise ValueError(f"{name} must be finite, got {v}")
    return v
