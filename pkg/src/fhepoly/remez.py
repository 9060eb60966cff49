"""Minimax approximation by the Remez exchange algorithm.

Two entry points cover everything the library needs:

* :func:`remez_sign_odd` fits an odd polynomial to the sign function on a
  symmetric two-band domain. Odd symmetry collapses the problem to fitting
  the constant one on the positive band with the odd Chebyshev basis, so a
  single-interval exchange suffices.
* :func:`remez_general` fits ReLU or abs on a symmetric interval. Both
  reduce exactly to the square-root function in t = x**2 (the best abs
  approximant is even, and ReLU differs from abs/2 by the free term x/2),
  which halves the system size and keeps high degrees tractable.

The exchange itself is the classical multi-point variant: solve the
alternation system on the current reference, locate the true extrema of the
error (float64 bracketing on a dense Chebyshev grid, then golden-section
refinement in extended precision), and replace the whole reference. A
single-point exchange is the fallback when the refreshed candidate set
degenerates.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from mpmath import mpf

from .poly import CHEBYSHEV, EVEN, NONE, ODD, Poly, SymmetricDomain, _clenshaw_mp
from .precision import resolve_precision, to_mpf, workbits

DEFAULT_TOL_BITS = 40
_GOLDEN_ITERS = 48


class RemezConvergenceError(RuntimeError):
    """Exchange failed to converge; carries the last error bracket."""

    def __init__(self, message, lower=None, upper=None, iterations=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
        self.iterations = iterations


@dataclass(frozen=True)
class RemezResult:
    """Converged minimax fit: polynomial, level error, and its extrema."""

    poly: Poly
    minimax_error: mpf
    extrema: tuple[mpf, ...]
    iterations: int


def _cheb_extrema_nodes(lo: mpf, hi: mpf, n: int) -> list[mpf]:
    mid = (lo + hi) / 2
    half = (hi - lo) / 2
    return [mid - half * mpmath.cos(mpmath.pi * i / (n - 1)) for i in range(n)]


def _tvals(u: mpf, kmax: int) -> list[mpf]:
    """T_0(u)..T_kmax(u) by the three-term recurrence."""
    vals = [mpf(1)]
    if kmax >= 1:
        vals.append(u)
    for _ in range(2, kmax + 1):
        vals.append(2 * u * vals[-1] - vals[-2])
    return vals


class _ChebProblem:
    """One Remez instance: basis T_k (k in ks) of base_interval, target f."""

    def __init__(self, ks, base_interval, domain, f_mp, f_np):
        self.ks = list(ks)
        self.kmax = max(ks)
        self.base_lo, self.base_hi = base_interval
        self.lo, self.hi = domain
        self.f_mp = f_mp
        self.f_np = f_np
        self.coeffs = None  # dense Chebyshev vector, length kmax+1

    def _u(self, x: mpf) -> mpf:
        return (2 * x - (self.base_lo + self.base_hi)) / (self.base_hi - self.base_lo)

    def solve(self, refs):
        n = len(self.ks)
        A = mpmath.zeros(n + 1, n + 1)
        rhs = mpmath.matrix(n + 1, 1)
        for i, x in enumerate(refs):
            tv = _tvals(self._u(x), self.kmax)
            for j, k in enumerate(self.ks):
                A[i, j] = tv[k]
            A[i, n] = mpf(-1) ** i
            rhs[i] = self.f_mp(x)
        sol = mpmath.lu_solve(A, rhs)
        dense = [mpf(0)] * (self.kmax + 1)
        for j, k in enumerate(self.ks):
            dense[k] = sol[j]
        self.coeffs = dense
        return sol[n]

    def err_mp(self, x: mpf) -> mpf:
        return self.f_mp(x) - _clenshaw_mp(self.coeffs, self._u(x))

    def err_np(self, x: np.ndarray) -> np.ndarray:
        lo, hi = float(self.base_lo), float(self.base_hi)
        u = (2.0 * x - (lo + hi)) / (hi - lo)
        dense = np.array([float(c) for c in self.coeffs])
        return self.f_np(x) - np.polynomial.chebyshev.chebval(u, dense)


def _golden_max_abs(err_mp, a: mpf, b: mpf, iters: int = _GOLDEN_ITERS) -> mpf:
    """Abscissa maximizing |err| on [a, b] by golden-section search."""
    invphi = (mpmath.sqrt(5) - 1) / 2
    invphi2 = 1 - invphi
    h = b - a
    c = a + invphi2 * h
    d = a + invphi * h
    fc = abs(err_mp(c))
    fd = abs(err_mp(d))
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + invphi2 * h
            fc = abs(err_mp(c))
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + invphi * h
            fd = abs(err_mp(d))
    return c if fc > fd else d


def _find_candidates(problem: _ChebProblem, grid_points: int, max_candidates: int):
    """Locate local extrema of the error: grid bracketing plus refinement.

    Bracketing normally runs in float64. When the error level drops below
    the float64 noise floor the whole grid is re-evaluated in extended
    precision (on a coarser grid) so the brackets stay meaningful.
    """
    lo, hi = problem.lo, problem.hi
    flo, fhi = float(lo), float(hi)
    n = max(grid_points, 256)
    theta = np.linspace(np.pi, 0.0, n + 1)
    xs = (flo + fhi) / 2 + (fhi - flo) / 2 * np.cos(theta)
    r = problem.err_np(xs)
    absr = np.abs(r)
    if float(absr.max()) < 1e-12:
        n = max(n // 8, 128)
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        xs_mp = [mid - half * mpmath.cos(mpmath.pi * i / n) for i in range(n + 1)]
        r_mp = [problem.err_mp(x) for x in xs_mp]
        xs = xs_mp
        absr = np.array([float(abs(e)) for e in r_mp])
    idx = [i for i in range(1, n) if absr[i] >= absr[i - 1] and absr[i] >= absr[i + 1]]
    if len(idx) > max_candidates:
        idx = sorted(sorted(idx, key=lambda i: -absr[i])[:max_candidates])

    points = [lo, hi]
    for i in idx:
        a = to_mpf(xs[i - 1])
        b = to_mpf(xs[i + 1])
        points.append(_golden_max_abs(problem.err_mp, a, b))
    cands = []
    for x in points:
        x = min(max(x, lo), hi)
        cands.append((x, problem.err_mp(x)))
    cands.sort(key=lambda p: p[0])
    # Collapse near-duplicates and same-sign runs, keeping the larger error.
    eps_x = (hi - lo) * mpf(2) ** (-60)
    merged = []
    for x, e in cands:
        if merged and (x - merged[-1][0] < eps_x or _sign(e) == _sign(merged[-1][1])):
            if abs(e) > abs(merged[-1][1]):
                merged[-1] = (x, e)
        else:
            merged.append((x, e))
    return merged


def _sign(v) -> int:
    return 1 if v > 0 else (-1 if v < 0 else 0)


def _select_reference(cands, n_ref):
    """Trim an alternating candidate list to n_ref points, keeping the peak."""
    sel = list(cands)
    while len(sel) > n_ref:
        if abs(sel[0][1]) <= abs(sel[-1][1]):
            sel.pop(0)
        else:
            sel.pop()
    return sel


def _single_exchange(refs, ref_errs, x_star, e_star):
    """Classical one-point exchange preserving sign alternation."""
    s = _sign(e_star)
    xs = list(refs)
    if x_star < xs[0]:
        if _sign(ref_errs[0]) == s:
            xs[0] = x_star
        else:
            xs = [x_star] + xs[:-1]
    elif x_star > xs[-1]:
        if _sign(ref_errs[-1]) == s:
            xs[-1] = x_star
        else:
            xs = xs[1:] + [x_star]
    else:
        for i in range(len(xs) - 1):
            if xs[i] <= x_star <= xs[i + 1]:
                j = i if _sign(ref_errs[i]) == s else i + 1
                xs[j] = x_star
                break
    return xs


def _exchange_loop(problem: _ChebProblem, n_ref, prec, tol, grid_points, max_iter):
    refs = _cheb_extrema_nodes(problem.lo, problem.hi, n_ref)
    last_bracket = (None, None)
    with workbits(prec):
        for it in range(1, max_iter + 1):
            problem.solve(refs)
            cands = _find_candidates(problem, grid_points, 3 * n_ref + 8)
            peak = max(abs(e) for _, e in cands)
            if peak == 0:
                return refs, mpf(0), it
            sel = _select_reference(cands, n_ref)
            signs = [_sign(e) for _, e in sel]
            alternating = len(sel) == n_ref and all(
                signs[i] != 0 and signs[i] == -signs[i + 1] for i in range(len(sel) - 1)
            )
            if alternating:
                new_refs = [x for x, _ in sel]
                low = min(abs(e) for _, e in sel)
            else:
                ref_errs = [problem.err_mp(x) for x in refs]
                x_star, e_star = max(cands, key=lambda p: abs(p[1]))
                new_refs = _single_exchange(refs, ref_errs, x_star, e_star)
                low = min(abs(e) for e in ref_errs)
            last_bracket = (low, peak)
            if peak - low <= tol * peak and alternating:
                return new_refs, peak, it
            refs = new_refs
    raise RemezConvergenceError(
        f"no convergence after {max_iter} iterations "
        f"(error bracket [{mpmath.nstr(last_bracket[0], 8)}, {mpmath.nstr(last_bracket[1], 8)}])",
        lower=last_bracket[0],
        upper=last_bracket[1],
        iterations=max_iter,
    )


def remez_sign_odd(
    domain: SymmetricDomain,
    degree: int,
    tol=None,
    precision: int | None = None,
    grid_mult: int = 64,
    max_iter: int = 60,
) -> RemezResult:
    """Odd minimax approximant of sign on [-b,-a] u [a,b].

    Equivalent single-interval problem: approximate the constant one on
    [a, b] in the basis {T_1, T_3, ...} of [-b, b]. The returned polynomial
    carries exact zeros at even indices and equioscillates on
    (degree+1)/2 + 1 reference points.
    """
    if degree < 1 or degree % 2 == 0:
        raise ValueError(f"sign approximation needs an odd degree >= 1, got {degree}")
    prec = resolve_precision(precision, degree)
    a, b = domain.a, domain.b
    if domain.width <= b * mpf(2) ** (-(prec // 2)):
        raise ValueError(f"domain width {domain.width} is below the precision floor")
    tol = mpf(2) ** (-DEFAULT_TOL_BITS) if tol is None else to_mpf(tol, "tol")
    with workbits(prec):
        ks = list(range(1, degree + 1, 2))
        problem = _ChebProblem(ks, (-b, b), (a, b), lambda x: mpf(1), lambda x: 1.0)
        refs, err, iters = _exchange_loop(
            problem, len(ks) + 1, prec, tol, grid_mult * degree, max_iter
        )
        poly = Poly(CHEBYSHEV, (-b, b), tuple(problem.coeffs), parity=ODD, precision=prec)
    return RemezResult(poly, err, tuple(refs), iters)


def remez_general(
    f: str,
    interval,
    degree: int,
    tol=None,
    precision: int | None = None,
    grid_mult: int = 64,
    max_iter: int = 60,
) -> RemezResult:
    """Full minimax approximant of ReLU or abs on a symmetric interval.

    The abs problem is solved as sqrt in t = x**2 (its minimax approximant
    is even), and ReLU(x) = (x + abs(x))/2 maps any abs approximant to a
    ReLU approximant with exactly half the error; both reductions preserve
    minimax optimality. Extrema are reported in x, mirrored about zero,
    which yields at least degree+2 alternating points.
    """
    if f not in ("relu", "abs"):
        raise ValueError(f"unsupported target {f!r}; expected 'relu' or 'abs'")
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    lo = to_mpf(interval[0], "interval lo")
    hi = to_mpf(interval[1], "interval hi")
    if lo != -hi or hi <= 0:
        raise ValueError(f"interval must be symmetric [-h, h], got [{lo}, {hi}]")
    prec = resolve_precision(precision, degree)
    tol = mpf(2) ** (-DEFAULT_TOL_BITS) if tol is None else to_mpf(tol, "tol")
    m = degree // 2
    with workbits(prec):
        h = hi
        t_hi = h * h
        problem = _ChebProblem(
            list(range(m + 1)), (mpf(0), t_hi), (mpf(0), t_hi), mpmath.sqrt, np.sqrt
        )
        t_refs, err_t, iters = _exchange_loop(
            problem, m + 2, prec, tol, grid_mult * max(degree, 8), max_iter
        )
        # T_j(2t/h^2 - 1) with t = x^2 is exactly T_{2j}(x/h): even slots.
        even = [mpf(0)] * (2 * m + 1)
        for j, c in enumerate(problem.coeffs):
            even[2 * j] = c
        pos = sorted(mpmath.sqrt(t) for t in t_refs)
        extrema = [-x for x in reversed(pos) if x > 0] + pos
        if f == "abs":
            poly = Poly(CHEBYSHEV, (-h, h), tuple(even), parity=EVEN, precision=prec)
            return RemezResult(poly, err_t, tuple(extrema), iters)
        coeffs = [c / 2 for c in even]
        if len(coeffs) < 2:
            coeffs.append(mpf(0))
        coeffs[1] += h / 2
        poly = Poly(CHEBYSHEV, (-h, h), tuple(coeffs), parity=NONE, precision=prec)
        return RemezResult(poly, err_t / 2, tuple(extrema), iters)
