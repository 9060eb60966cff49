"""Composite minimax sign approximants with certified per-stage domains.

A composite sign approximant is a chain p_k o ... o p_1 where stage one is
the odd minimax sign fit on [-1, -eps] u [eps, 1] and every later stage is
the odd minimax sign fit on the certified image of the partial chain before
it. The image intervals are certified by dense grid scans with a padded
interpolation estimate, so each stage's fitting domain provably covers what
the previous stages can feed it (up to the padding convention).

The achieved closeness exponent beta is minus log2 of the certified final
deviation from one on [eps, 1]; odd symmetry covers the negative band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from mpmath import mpf

from . import reference
from .poly import Poly, SymmetricDomain, to_power_basis
from .precision import resolve_precision, to_mpf, workbits
from .remez import RemezResult, remez_sign_odd

DEFAULT_STAGE_GRID = 4097
DEFAULT_CERTIFY_POINTS = 1_000_000


def schedule_depth(degrees: Sequence[int]) -> int:
    """Multiplicative depth of the max operator built on these stages.

    Each stage of degree d costs ceil(log2(d+1)) levels; the final product
    with the operand (x * p(x) in the ReLU form) costs one more.
    """
    return sum(math.ceil(math.log2(d + 1)) for d in degrees) + 1


@dataclass(frozen=True)
class ApproxSpec:
    """Construction parameters of one composite: factor, degrees, depth, range."""

    alpha: int | None
    zeta: int | None
    degrees: tuple[int, ...]
    depth: int
    B: float | None = None

    def __post_init__(self):
        if not self.degrees:
            raise ValueError("degree schedule is empty")
        for d in self.degrees:
            if d < 1 or d % 2 == 0:
                raise ValueError(f"stage degrees must be odd and >= 1, got {d}")
        if self.depth != schedule_depth(self.degrees):
            raise ValueError(
                f"depth {self.depth} does not match the schedule "
                f"(expected {schedule_depth(self.degrees)})"
            )
        if (self.alpha is None) != (self.zeta is None):
            raise ValueError("alpha and zeta must be given together")
        if self.alpha is not None and not 0 < self.epsilon < 1:
            raise ValueError("zeta * 2**-alpha must lie in (0, 1)")

    @property
    def epsilon(self) -> mpf:
        if self.alpha is None:
            raise ValueError("spec has no alpha/zeta; epsilon is caller-defined")
        return mpf(self.zeta) * mpf(2) ** (-self.alpha)

    @classmethod
    def from_degrees(cls, degrees, alpha=None, zeta=None, B=None) -> "ApproxSpec":
        degrees = tuple(int(d) for d in degrees)
        return cls(alpha, zeta, degrees, schedule_depth(degrees), B)


def standard_schedule(alpha: int) -> ApproxSpec:
    """The tabulated depth-optimized schedule for alpha in 4..14."""
    row = reference.SCHEDULES.get(alpha)
    if row is None:
        raise ValueError(
            f"no standard schedule for alpha={alpha} "
            f"(supported range {reference.SCHEDULE_ALPHA_MIN}..{reference.SCHEDULE_ALPHA_MAX}); "
            "supply an explicit epsilon and degree schedule instead"
        )
    return ApproxSpec(row.alpha, row.zeta, row.degrees, row.depth)


@dataclass(frozen=True)
class SignComposite:
    """Built composite chain with certified stage domains and errors.

    ``stage_domains[i]`` is the two-band domain stage i was fitted on;
    ``stage_errors[i]`` is the certified deviation of the partial chain
    through stage i from one over [epsilon, 1]. ``beta`` is the achieved
    closeness exponent, from the final certified deviation.
    """

    stages: tuple[Poly, ...]
    stage_domains: tuple[SymmetricDomain, ...]
    stage_errors: tuple[mpf, ...]
    epsilon: mpf
    beta: mpf
    precision: int

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(p.degree for p in self.stages)

    def eval(self, x):
        """Vectorized float64 evaluation of the full chain."""
        y = np.asarray(x, dtype=np.float64)
        for p in self.stages:
            y = p.eval(y)
        return y

    def eval_mp(self, x) -> mpf:
        y = mpf(x)
        for p in self.stages:
            y = p.eval_mp(y)
        return y

    def __call__(self, x):
        if isinstance(x, mpf):
            return self.eval_mp(x)
        return self.eval(x)

    def dump_coefficients(self) -> str:
        """Stage-by-stage power-basis coefficient dump.

        One block per stage: a header ``stage <i> degree <d>`` followed by
        the power-basis coefficients in ascending degree order, printed with
        the full digit count the working precision supports.
        """
        digits = int(self.precision * 0.30103) + 2
        blocks = []
        for i, p in enumerate(self.stages, start=1):
            q = to_power_basis(p, n_check=200)
            lines = [f"stage {i} degree {q.degree}"]
            lines += [mpmath.nstr(c, digits) for c in q.coeffs]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def _parabolic_corrections(xs, ys):
    """Max concave-vertex overshoot above the sampled local maxima."""
    best = mpf(0)
    for i in range(1, len(xs) - 1):
        if not (ys[i] >= ys[i - 1] and ys[i] >= ys[i + 1]):
            continue
        d01 = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])
        d12 = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        a = (d12 - d01) / (xs[i + 1] - xs[i - 1])
        if a >= 0:
            continue
        xv = (xs[i - 1] + xs[i]) / 2 - d01 / (2 * a)
        if not xs[i - 1] <= xv <= xs[i + 1]:
            continue
        yv = ys[i - 1] + d01 * (xv - xs[i - 1]) + a * (xv - xs[i - 1]) * (xv - xs[i])
        best = max(best, yv - ys[i])
    return best


def image_interval(
    partial,
    base: SymmetricDomain,
    grid: int = DEFAULT_STAGE_GRID,
    precision: int | None = None,
) -> SymmetricDomain:
    """Certified mirrored image interval of a partial chain over ``base``.

    Evaluates the composition on a dense Chebyshev grid over the positive
    band of ``base``, takes the maximum deviation e from one, and inflates
    it by twice the local parabolic interpolation estimate plus a precision
    floor. Returns [1-e, 1+e] mirrored. An empty chain returns ``base``.
    """
    stages = partial.stages if isinstance(partial, SignComposite) else tuple(partial)
    if not stages:
        return base
    prec = resolve_precision(precision, max(p.degree for p in stages))
    with workbits(prec):
        lo, hi = base.a, base.b
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        n = grid - 1
        xs = [mid - half * mpmath.cos(mpmath.pi * i / n) for i in range(grid)]
        devs = []
        for x in xs:
            y = x
            for p in stages:
                y = p.eval_mp(y)
            devs.append(abs(y - 1))
        e = max(devs)
        e_cert = e + 2 * _parabolic_corrections(xs, devs) + mpf(2) ** (-(prec // 2))
        if e_cert >= 1:
            raise ValueError(
                f"partial chain deviates by {mpmath.nstr(e_cert, 8)} >= 1; "
                "the image interval would touch zero"
            )
        return SymmetricDomain(1 - e_cert, 1 + e_cert)


def build_sign_composite(
    epsilon,
    degrees: Sequence[int],
    precision: int | None = None,
    tol=None,
    stage_grid: int = DEFAULT_STAGE_GRID,
) -> SignComposite:
    """Build the composite sign approximant for a gap and degree schedule.

    Stage i is fitted with :func:`remez_sign_odd` on the certified image of
    the stages before it (stage one on [epsilon, 1]). Remez non-convergence
    propagates; a stage whose certified image collapses below the precision
    floor makes any further stage meaningless and is rejected.
    """
    eps = to_mpf(epsilon, "epsilon")
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    degrees = tuple(int(d) for d in degrees)
    if not degrees:
        raise ValueError("degree schedule is empty")
    prec = resolve_precision(precision, max(degrees))
    floor = mpf(2) ** (-(prec // 2))
    with workbits(prec):
        base = SymmetricDomain(eps, mpf(1))
        domain = base
        stages: list[Poly] = []
        domains: list[SymmetricDomain] = []
        errors: list[mpf] = []
        for d in degrees:
            result: RemezResult = remez_sign_odd(domain, d, tol=tol, precision=prec)
            stages.append(result.poly)
            domains.append(domain)
            img = image_interval(stages, base, grid=stage_grid, precision=prec)
            e_img = img.b - 1
            errors.append(e_img)
            e_dom = max(e_img, result.minimax_error)
            if e_dom < floor:
                raise ValueError(
                    f"certified image width {mpmath.nstr(2 * e_dom, 6)} after degree-{d} "
                    "stage is below the precision floor; drop the remaining stages "
                    "or lower the precision"
                )
            domain = SymmetricDomain(1 - e_dom, 1 + e_dom)
        beta = -mpmath.log(errors[-1], 2)
    return SignComposite(
        tuple(stages), tuple(domains), tuple(errors), eps, beta, prec
    )


@dataclass(frozen=True)
class ClosenessReport:
    passed: bool
    beta_target: float
    max_deviation: float
    witness: float
    beta_achieved: float

    def __bool__(self):
        return self.passed


def certify_closeness(
    composite: SignComposite,
    beta_target,
    n_points: int = DEFAULT_CERTIFY_POINTS,
) -> ClosenessReport:
    """Scan |p(x) - 1| over [epsilon, 1] against the target 2**-beta_target.

    The scan runs on log-spaced float64 points (densest near epsilon where
    the chain varies fastest); the worst point is re-evaluated in extended
    precision. Odd symmetry makes the negative band identical.
    """
    eps = float(composite.epsilon)
    xs = np.geomspace(eps, 1.0, n_points)
    dev = np.abs(composite.eval(xs) - 1.0)
    i = int(np.argmax(dev))
    witness = float(xs[i])
    with workbits(composite.precision):
        refined = float(abs(composite.eval_mp(witness) - 1))
    max_dev = max(float(dev[i]), refined)
    threshold = 2.0 ** -float(beta_target)
    beta_achieved = float("inf") if max_dev == 0 else -math.log2(max_dev)
    return ClosenessReport(
        passed=max_dev <= threshold,
        beta_target=float(beta_target),
        max_deviation=max_dev,
        witness=witness,
        beta_achieved=beta_achieved,
    )


@lru_cache(maxsize=32)
def standard_sign_composite(alpha: int, precision: int | None = None) -> SignComposite:
    """Build (and cache) the composite for a tabulated schedule."""
    spec = standard_schedule(alpha)
    return build_sign_composite(spec.epsilon, spec.degrees, precision=precision)
