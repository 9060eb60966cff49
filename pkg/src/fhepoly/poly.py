"""Polynomial and domain value types shared across the library.

Polynomials are stored either in the Chebyshev basis of their interval
(the conditioning-friendly internal form) or in the power basis (the
export form). Coefficients are mpmath floats; a cached float64 copy backs
the vectorized numpy evaluation path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mpf

from .precision import DEFAULT_PRECISION_BITS, to_mpf, workbits

CHEBYSHEV = "chebyshev"
POWER = "power"

ODD = "odd"
EVEN = "even"
NONE = "none"


@dataclass(frozen=True)
class SymmetricDomain:
    """Two-sided domain [-b, -a] union [a, b] with 0 < a < b."""

    a: mpf
    b: mpf

    def __post_init__(self):
        object.__setattr__(self, "a", to_mpf(self.a, "a"))
        object.__setattr__(self, "b", to_mpf(self.b, "b"))
        if not (0 < self.a < self.b):
            raise ValueError(f"need 0 < a < b, got a={self.a}, b={self.b}")

    @property
    def width(self) -> mpf:
        return self.b - self.a

    def contains(self, x) -> bool:
        return self.a <= abs(mpf(x)) <= self.b

    def __repr__(self):
        return f"SymmetricDomain(a={mpmath.nstr(self.a, 12)}, b={mpmath.nstr(self.b, 12)})"


def _clenshaw_mp(coeffs: Sequence[mpf], u: mpf) -> mpf:
    """Clenshaw recurrence for a Chebyshev series at mapped argument u."""
    b1 = mpf(0)
    b2 = mpf(0)
    two_u = 2 * u
    for c in reversed(coeffs[1:]):
        b1, b2 = two_u * b1 - b2 + c, b1
    return u * b1 - b2 + coeffs[0]


def _horner_mp(coeffs: Sequence[mpf], x: mpf) -> mpf:
    acc = mpf(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class Poly:
    """Polynomial with basis tag, interval, extended-precision coefficients and parity.

    ``coeffs[k]`` multiplies T_k of the affinely mapped argument (Chebyshev
    basis) or x**k (power basis). Parity is enforced structurally: an odd
    (even) polynomial carries exact zeros at even (odd) indices and must
    live on an origin-symmetric interval.
    """

    basis: str
    interval: tuple[mpf, mpf]
    coeffs: tuple[mpf, ...]
    parity: str = NONE
    precision: int = DEFAULT_PRECISION_BITS

    def __post_init__(self):
        if self.basis not in (CHEBYSHEV, POWER):
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.parity not in (ODD, EVEN, NONE):
            raise ValueError(f"unknown parity {self.parity!r}")
        lo = to_mpf(self.interval[0], "interval lo")
        hi = to_mpf(self.interval[1], "interval hi")
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
        if not self.coeffs:
            raise ValueError("coefficient list is empty")
        coeffs = tuple(to_mpf(c, f"coeff[{i}]") for i, c in enumerate(self.coeffs))
        object.__setattr__(self, "interval", (lo, hi))
        object.__setattr__(self, "coeffs", coeffs)
        if self.parity != NONE:
            if lo != -hi:
                raise ValueError("parity tags require an origin-symmetric interval")
            bad = 0 if self.parity == ODD else 1
            for k, c in enumerate(coeffs):
                if k % 2 == bad and c != 0:
                    raise ValueError(
                        f"{self.parity} polynomial has nonzero coefficient at index {k}"
                    )

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @cached_property
    def _float_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs], dtype=np.float64)

    @cached_property
    def _float_interval(self) -> tuple[float, float]:
        return float(self.interval[0]), float(self.interval[1])

    def _map_u_np(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self._float_interval
        return (2.0 * x - (lo + hi)) / (hi - lo)

    def eval(self, x):
        """Vectorized float64 evaluation (Clenshaw or Horner)."""
        x = np.asarray(x, dtype=np.float64)
        if self.basis == CHEBYSHEV:
            return np.polynomial.chebyshev.chebval(self._map_u_np(x), self._float_coeffs)
        return np.polynomial.polynomial.polyval(x, self._float_coeffs)

    def eval_mp(self, x) -> mpf:
        """Extended-precision evaluation at a scalar point."""
        with workbits(self.precision):
            x = mpf(x)
            if self.basis == CHEBYSHEV:
                lo, hi = self.interval
                u = (2 * x - (lo + hi)) / (hi - lo)
                return _clenshaw_mp(self.coeffs, u)
            return _horner_mp(self.coeffs, x)

    def __call__(self, x):
        if isinstance(x, mpf):
            return self.eval_mp(x)
        return self.eval(x)


def _chebyshev_power_rows(n: int) -> list[list[int]]:
    """Power-basis integer coefficients of T_0..T_n (exact)."""
    rows = [[1], [0, 1]]
    for k in range(2, n + 1):
        prev, prev2 = rows[k - 1], rows[k - 2]
        row = [0] * (k + 1)
        for i, c in enumerate(prev):
            row[i + 1] += 2 * c
        for i, c in enumerate(prev2):
            row[i] -= c
        rows.append(row)
    return rows[: n + 1]


def to_power_basis(p: Poly, verify: bool = True, n_check: int = 1000) -> Poly:
    """Convert a Chebyshev-basis polynomial to the power basis in x.

    The conversion runs at an elevated working precision (the Chebyshev to
    power change of basis loses roughly one bit per degree). When ``verify``
    is set, both forms are compared at ``n_check`` sample points and the
    agreement must be within 2**(-precision/2) relative, so precision loss
    surfaces as a hard failure rather than silent garbage.
    """
    if p.basis == POWER:
        return p
    n = p.degree
    work = p.precision + 2 * n + 64
    with workbits(work):
        lo, hi = p.interval
        rows = _chebyshev_power_rows(n)
        # Power coefficients in the mapped variable u.
        in_u = [mpf(0)] * (n + 1)
        for k, c in enumerate(p.coeffs):
            if c == 0:
                continue
            for i, r in enumerate(rows[k]):
                if r:
                    in_u[i] += c * r
        s = 2 / (hi - lo)
        t = -(hi + lo) / (hi - lo)
        if t == 0:
            coeffs = [in_u[k] * s**k for k in range(n + 1)]
        else:
            # Substitute u = s*x + t by accumulating the binomial powers.
            coeffs = [mpf(0)] * (n + 1)
            pw = [mpf(1)]  # (s*x + t)**k, power coefficients in x
            for k in range(n + 1):
                if in_u[k] != 0:
                    for i, c in enumerate(pw):
                        coeffs[i] += in_u[k] * c
                nxt = [mpf(0)] * (k + 2)
                for i, c in enumerate(pw):
                    nxt[i] += c * t
                    nxt[i + 1] += c * s
                pw = nxt
        out = Poly(POWER, p.interval, tuple(coeffs), parity=p.parity, precision=p.precision)
    if verify:
        _check_roundtrip(p, out, n_check)
    return out


def _check_roundtrip(p: Poly, q: Poly, n_check: int) -> None:
    tol = mpf(2) ** (-(p.precision // 2))
    with workbits(p.precision + 64):
        lo, hi = p.interval
        for i in range(n_check):
            x = lo + (hi - lo) * mpf(2 * i + 1) / (2 * n_check)
            a = p.eval_mp(x)
            b = q.eval_mp(x)
            scale = max(abs(a), abs(b), mpf(1))
            if abs(a - b) > tol * scale:
                raise ArithmeticError(
                    f"basis conversion round-trip failed at x={mpmath.nstr(x, 10)}: "
                    f"|{mpmath.nstr(a, 10)} - {mpmath.nstr(b, 10)}| > {mpmath.nstr(tol, 5)}"
                )
