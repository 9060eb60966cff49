"""Derived operators on top of a composite sign approximant.

The sign chain p gives an approximate ReLU r(x) = (x + x p(x))/2, an
approximate two-input max m(a, b) = ((a+b) + (a-b) p(a-b))/2, and an
approximate n-input max M built by halving recursion on m. Range-extended
variants rescale the unit-range operators to [-B, B].

Evaluation is vectorized float64 (the network path); the worst points found
by the verification sweeps are re-checked in extended precision on the same
coefficients.

Inputs that graze a domain boundary within a 2**-alpha relative slack are
clamped with a logged warning instead of rejected, because approximation
ranges are chosen with an empirical margin and real activations can touch
them. Anything beyond the slack raises.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from mpmath import mpf

from .composite import SignComposite, standard_sign_composite
from .precision import workbits

logger = logging.getLogger(__name__)


def _clamp(x, lo: float, hi: float, slack: float, label: str):
    """Clamp values into [lo, hi], tolerating overshoot up to ``slack``."""
    x = np.asarray(x, dtype=np.float64)
    below = lo - x
    above = x - hi
    worst = max(float(below.max(initial=0.0)), float(above.max(initial=0.0)))
    if worst > 0:
        if worst > slack:
            raise ValueError(
                f"{label}: input outside [{lo:g}, {hi:g}] by {worst:g}, "
                f"beyond the clamp slack {slack:g}"
            )
        n = int((below > 0).sum() + (above > 0).sum())
        logger.warning("%s: clamped %d value(s) overshooting [%g, %g] by up to %g",
                       label, n, lo, hi, worst)
        x = np.clip(x, lo, hi)
    return x


def _pow2(alpha: int) -> float:
    return 2.0**-alpha


@dataclass(frozen=True)
class ReluApprox:
    """Approximate ReLU with error at most B * 2**-alpha on [-B, B]."""

    composite: SignComposite
    alpha: int
    B: float = 1.0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError(f"approximation range B must be >= 1, got {self.B}")
        if float(self.composite.beta) < self.alpha - 1:
            raise ValueError(
                f"composite achieves closeness exponent {float(self.composite.beta):.3f}, "
                f"below the {self.alpha - 1} required for alpha={self.alpha}"
            )

    def r(self, x):
        """Unit-range form, |x| <= 1."""
        x = _clamp(x, -1.0, 1.0, _pow2(self.alpha), "relu r")
        return (x + x * self.composite.eval(x)) / 2.0

    def r_tilde(self, x):
        """Range-extended form B * r(x/B), |x| <= B."""
        x = _clamp(x, -self.B, self.B, self.B * _pow2(self.alpha), "relu r_tilde")
        return (x + x * self.composite.eval(x / self.B)) / 2.0

    def r_mp(self, x) -> mpf:
        with workbits(self.composite.precision):
            x = mpf(x)
            return (x + x * self.composite.eval_mp(x)) / 2

    def r_tilde_mp(self, x) -> mpf:
        with workbits(self.composite.precision):
            x = mpf(x)
            return (x + x * self.composite.eval_mp(x / self.B)) / 2

    def __call__(self, x):
        return self.r_tilde(x)


@dataclass(frozen=True)
class MaxApprox:
    """Approximate max of two values in [0, 1], error at most 2**-alpha."""

    composite: SignComposite
    alpha: int

    def m(self, a, b):
        a = _clamp(a, 0.0, 1.0, _pow2(self.alpha), "max m")
        b = _clamp(b, 0.0, 1.0, _pow2(self.alpha), "max m")
        d = a - b
        return ((a + b) + d * self.composite.eval(d)) / 2.0

    def _m_raw(self, a, b):
        d = a - b
        return ((a + b) + d * self.composite.eval(d)) / 2.0

    def m_mp(self, a, b) -> mpf:
        with workbits(self.composite.precision):
            a, b = mpf(a), mpf(b)
            d = a - b
            return ((a + b) + d * self.composite.eval_mp(d)) / 2

    def margin(self, n: int) -> float:
        """Half-gap the n-input recursion needs away from 0 and 1."""
        return max(0, math.ceil(math.log2(n)) - 1) * _pow2(self.alpha)

    def M(self, xs, check_range_stability: bool = False):
        """Approximate max of n inputs by the halving recursion.

        Splits n = 2k into (first k, last k) and n = 2k+1 into
        (first k, last k+1). Inputs must keep a margin of
        (ceil(log2 n) - 1) * 2**-alpha from both ends of [0, 1]. With
        ``check_range_stability`` every intermediate value is asserted to
        stay within the input hull widened by ceil(log2 size) * 2**-alpha.
        """
        xs = [np.asarray(x, dtype=np.float64) for x in xs]
        n = len(xs)
        if n < 1:
            raise ValueError("need at least one input")
        delta = self.margin(n)
        xs = [
            _clamp(x, delta, 1.0 - delta, _pow2(self.alpha), f"max M (n={n})")
            for x in xs
        ]
        hull = None
        if check_range_stability:
            hull = (min(float(np.min(x)) for x in xs), max(float(np.max(x)) for x in xs))
        return self._M_rec(xs, hull)

    def _M_rec(self, xs, hull):
        n = len(xs)
        if n == 1:
            out = xs[0]
        else:
            k = n // 2
            out = self._m_raw(self._M_rec(xs[:k], hull), self._M_rec(xs[k:], hull))
        if hull is not None:
            widen = math.ceil(math.log2(n)) * _pow2(self.alpha)
            lo, hi = hull[0] - widen, hull[1] + widen
            bad_lo = float(np.min(out)) < lo - 1e-12
            bad_hi = float(np.max(out)) > hi + 1e-12
            if bad_lo or bad_hi:
                raise AssertionError(
                    f"range stability violated at subtree size {n}: "
                    f"values in [{float(np.min(out)):.6g}, {float(np.max(out)):.6g}] "
                    f"vs allowed [{lo:.6g}, {hi:.6g}]"
                )
        return out

    def _M_raw_domain(self, xs):
        # Mapped pool inputs land exactly on the recursion domain; only
        # float representation overshoot needs absorbing.
        xs = [np.asarray(x, dtype=np.float64) for x in xs]
        delta = self.margin(len(xs))
        slack = 64 * float(np.finfo(np.float64).eps)
        xs = [_clamp(x, delta, 1.0 - delta, slack, "pool window") for x in xs]
        return self._M_rec(xs, None)

    def M_mp(self, xs) -> mpf:
        with workbits(self.composite.precision):
            vals = [mpf(x) for x in xs]
            return self._M_mp_rec(vals)

    def _M_mp_rec(self, xs):
        n = len(xs)
        if n == 1:
            return xs[0]
        k = n // 2
        a = self._M_mp_rec(xs[:k])
        b = self._M_mp_rec(xs[k:])
        d = a - b
        return ((a + b) + d * self.composite.eval_mp(d)) / 2


@dataclass(frozen=True)
class MaxPoolApprox:
    """Approximate n-input max on [-B, B], error at most B' * 2**-alpha * ceil(log2 n)."""

    composite: SignComposite
    alpha: int
    n: int
    B: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"pool input count must be >= 1, got {self.n}")
        if self.B < 1:
            raise ValueError(f"approximation range B must be >= 1, got {self.B}")
        if 0.5 - self._margin_units() <= 0:
            raise ValueError(
                f"pool of {self.n} inputs at alpha={self.alpha} leaves no usable range"
            )

    def _margin_units(self) -> float:
        return max(0, math.ceil(math.log2(self.n)) - 1) * _pow2(self.alpha)

    @property
    def B_prime(self) -> float:
        return self.B / (0.5 - self._margin_units())

    @property
    def error_bound(self) -> float:
        return self.B_prime * _pow2(self.alpha) * math.ceil(math.log2(self.n))

    def _max(self) -> MaxApprox:
        return MaxApprox(self.composite, self.alpha)

    def m_tilde(self, xs):
        """Approximate max of the n inputs, each within [-B, B].

        Inputs are mapped into the margin-respecting window around 0.5,
        reduced by the unit-range recursion, and mapped back.
        """
        if len(xs) != self.n:
            raise ValueError(f"expected {self.n} inputs, got {len(xs)}")
        slack = self.B * _pow2(self.alpha)
        clamped = [_clamp(x, -self.B, self.B, slack, "maxpool m_tilde") for x in xs]
        if self.n == 1:
            return clamped[0]
        bp = self.B_prime
        mapped = [x / bp + 0.5 for x in clamped]
        inner = self._max()._M_raw_domain(mapped)
        return bp * (inner - 0.5)

    def m_tilde_mp(self, xs) -> mpf:
        with workbits(self.composite.precision):
            if self.n == 1:
                return mpf(xs[0])
            bp = mpf(self.B) / (mpf("0.5") - self._margin_units())
            mapped = [mpf(x) / bp + mpf("0.5") for x in xs]
            return bp * (self._max()._M_mp_rec(mapped) - mpf("0.5"))

    def __call__(self, xs):
        return self.m_tilde(xs)


@lru_cache(maxsize=64)
def relu_approx(alpha: int, B: float = 1.0, precision: int | None = None) -> ReluApprox:
    return ReluApprox(standard_sign_composite(alpha, precision), alpha, B)


@lru_cache(maxsize=64)
def max_approx(alpha: int, precision: int | None = None) -> MaxApprox:
    return MaxApprox(standard_sign_composite(alpha, precision), alpha)


@lru_cache(maxsize=64)
def maxpool_approx(alpha: int, n: int, B: float = 1.0, precision: int | None = None) -> MaxPoolApprox:
    return MaxPoolApprox(standard_sign_composite(alpha, precision), alpha, n, B)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one empirical bound sweep."""

    op: str
    alpha: int
    bound: float
    max_error: float
    worst_input: tuple
    passed: bool
    samples: int

    def __bool__(self):
        return self.passed


def _relu_sweep(op: ReluApprox, n_points: int):
    B = op.B
    eps = float(op.composite.epsilon) * B
    xs = np.linspace(-B, B, n_points)
    # Adversarial clusters: the sign transition band and both ends.
    extra = [
        np.geomspace(max(eps * 1e-3, 1e-12 * B), 2 * eps, 2000),
        B - np.geomspace(1e-12 * B, 0.1 * B, 2000),
    ]
    xs = np.concatenate([xs] + extra + [-e for e in extra] + [np.zeros(1)])
    err = np.abs(op.r_tilde(xs) - np.maximum(xs, 0.0))
    i = int(np.argmax(err))
    with workbits(op.composite.precision):
        x = mpf(float(xs[i]))
        refined = float(abs(op.r_tilde_mp(x) - (x if x > 0 else mpf(0))))
    return max(float(err[i]), refined), (float(xs[i]),), xs.size


def _max_sweep(op: MaxApprox, n_samples: int, rng):
    a = rng.uniform(0.0, 1.0, n_samples)
    b = rng.uniform(0.0, 1.0, n_samples)
    # Near ties stress the sign transition of the difference.
    ties = rng.uniform(0.0, 1.0, n_samples // 4)
    a = np.concatenate([a, ties, [0.0, 1.0, 0.5]])
    b = np.concatenate([b, ties + rng.uniform(-1, 1, ties.size) * 2.0 ** -(op.alpha + 2), [0.0, 1.0, 0.5]])
    b = np.clip(b, 0.0, 1.0)
    err = np.abs(op.m(a, b) - np.maximum(a, b))
    i = int(np.argmax(err))
    refined = float(abs(op.m_mp(a[i], b[i]) - max(mpf(float(a[i])), mpf(float(b[i])))))
    return max(float(err[i]), refined), (float(a[i]), float(b[i])), a.size


def _pool_inputs(n, lo, hi, n_samples, rng):
    xs = rng.uniform(lo, hi, size=(n_samples, n))
    ties = np.repeat(rng.uniform(lo, hi, size=(n_samples // 4, 1)), n, axis=1)
    ties += rng.uniform(-1, 1, ties.shape) * (hi - lo) * 1e-6
    return np.clip(np.concatenate([xs, ties]), lo, hi)


def _maxpool_unit_sweep(op: MaxApprox, n: int, n_samples: int, rng):
    delta = op.margin(n)
    batch = _pool_inputs(n, delta, 1.0 - delta, n_samples, rng)
    vals = op.M(list(batch.T))
    err = np.abs(vals - batch.max(axis=1))
    i = int(np.argmax(err))
    refined = float(abs(op.M_mp([float(v) for v in batch[i]]) - mpf(float(batch[i].max()))))
    return max(float(err[i]), refined), tuple(float(v) for v in batch[i]), batch.shape[0]


def _maxpool_scaled_sweep(op: MaxPoolApprox, n_samples: int, rng):
    batch = _pool_inputs(op.n, -op.B, op.B, n_samples, rng)
    vals = op.m_tilde(list(batch.T))
    err = np.abs(vals - batch.max(axis=1))
    i = int(np.argmax(err))
    refined = float(abs(op.m_tilde_mp([float(v) for v in batch[i]]) - mpf(float(batch[i].max()))))
    return max(float(err[i]), refined), tuple(float(v) for v in batch[i]), batch.shape[0]


def verify_bound(
    op: str,
    alpha: int,
    B: float = 1.0,
    n: int | None = None,
    composite: SignComposite | None = None,
    n_points: int = 1_000_000,
    n_samples: int = 10_000,
    seed: int = 0,
) -> BoundReport:
    """Empirically probe one operator against its theoretical error bound.

    ``op`` is one of relu, relu_scaled, max, maxpool, maxpool_scaled. The
    sweep mixes dense or random sampling with adversarial inputs (sign
    transition band, near ties); the worst point is re-evaluated in
    extended precision before the verdict.
    """
    comp = composite if composite is not None else standard_sign_composite(alpha)
    rng = np.random.default_rng(seed)
    if op == "relu":
        ra = ReluApprox(comp, alpha, 1.0)
        max_err, worst, samples = _relu_sweep(ra, n_points)
        bound = 2.0**-alpha
    elif op == "relu_scaled":
        ra = ReluApprox(comp, alpha, B)
        max_err, worst, samples = _relu_sweep(ra, n_points)
        bound = B * 2.0**-alpha
    elif op == "max":
        ma = MaxApprox(comp, alpha)
        max_err, worst, samples = _max_sweep(ma, n_samples, rng)
        bound = 2.0**-alpha
    elif op == "maxpool":
        if n is None:
            raise ValueError("maxpool sweep needs the input count n")
        ma = MaxApprox(comp, alpha)
        max_err, worst, samples = _maxpool_unit_sweep(ma, n, n_samples, rng)
        bound = math.ceil(math.log2(n)) * 2.0**-alpha
    elif op == "maxpool_scaled":
        if n is None:
            raise ValueError("maxpool sweep needs the input count n")
        mp_op = MaxPoolApprox(comp, alpha, n, B)
        max_err, worst, samples = _maxpool_scaled_sweep(mp_op, n_samples, rng)
        bound = mp_op.error_bound
    else:
        raise ValueError(f"unknown operator tag {op!r}")
    return BoundReport(op, alpha, bound, max_err, worst, max_err <= bound, samples)
