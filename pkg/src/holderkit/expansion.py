"""Fractional and mixed-order Taylor expansions.

Two exponent ladders are supported:

``alpha_plus_k``
    ``f(x +- eps) = f(x) + sum_k c_k eps**(alpha + k)``; the coefficients come
    from ``c_k = lim d^k/deps^k [eps**(1-alpha) f'(x +- eps)] / (k! (k + alpha))``,
    with an overall minus sign on the backward side so that the stored
    coefficients expand ``f(x - eps)`` directly.
``alpha_times_k``
    ``f = g(x**alpha)`` expanded about 0, ``c_k = (+-1)**k g^(k)(0) / k!``.

The ``k``-th derivative in ``eps`` is formed symbolically. Evaluating it near
``eps = 0`` cancels terms of size ``eps**-k`` against each other, so samples are
taken with mpmath at ``dps`` digits; the coefficients are then rounded to
floats (the exact values remain available as ``coeffs_hp``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath

from holderkit.diffops import Direction
from holderkit.errors import DomainError, MissingDerivative, NonConvergent
from holderkit.exprlang import Add, Const, Mul, Pow, RealFn, Var, differentiate, substitute
from holderkit.limits import DEFAULT_TOL, EpsSchedule, LimitEstimate, extrapolate

__all__ = [
    "Ladder",
    "FracSeries",
    "ErrorCurve",
    "frac_taylor_coeffs",
    "compound_power_coeffs",
    "residual_quotient_coeffs",
    "eval_series",
    "error_curve",
]

DEFAULT_DPS = 60
# Digits assumed lost to cancellation beyond the eps**-k growth of the terms.
_NOISE_DIGITS = 15


class Ladder(str, enum.Enum):
    ALPHA_PLUS_K = "alpha_plus_k"
    ALPHA_TIMES_K = "alpha_times_k"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FracSeries:
    """A truncated fractional power series about ``base_x``.

    Attributes:
        coeffs: ``c_0..c_n``. For ``alpha_plus_k`` term ``k`` multiplies
            ``eps**(alpha+k)``; for ``alpha_times_k`` it multiplies
            ``eps**(alpha*k)`` and ``c_0`` equals ``f_at_base`` (not summed twice).
        coeffs_hp: The same coefficients in high precision, when available.
        estimates: Limit diagnostics per coefficient (empty for exact ladders).
    """

    base_x: float
    f_at_base: float
    alpha: float
    coeffs: tuple[float, ...]
    dir: Direction = Direction.FORWARD
    ladder: Ladder = Ladder.ALPHA_PLUS_K
    coeffs_hp: tuple | None = field(default=None, compare=False)
    estimates: tuple[LimitEstimate, ...] = field(default=(), compare=False)
    f_at_base_hp: object = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return len(self.coeffs) - 1

    def exponent(self, k: int) -> float:
        return self.alpha + k if self.ladder is Ladder.ALPHA_PLUS_K else self.alpha * k

    def terms(self) -> list[tuple[int, float, float]]:
        """``(k, exponent, coefficient)`` for every summed term."""
        start = 1 if self.ladder is Ladder.ALPHA_TIMES_K else 0
        return [(k, self.exponent(k), self.coeffs[k]) for k in range(start, len(self.coeffs))]

    def statuses(self) -> list[str]:
        if self.estimates:
            return [str(e.status) for e in self.estimates]
        return ["exact"] * len(self.coeffs)


@dataclass(frozen=True)
class ErrorCurve:
    """Truncation error samples; ``skipped`` lists grid points outside the domain."""

    points: tuple[tuple[float, float], ...]
    skipped: tuple[float, ...] = ()

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _kernel_expr(f: RealFn, x: float, alpha: float, dir: Direction):
    """``eps**(1-alpha) * f'(x +- eps)`` as an expression in the variable ``x`` (standing for eps)."""
    if f.expr is None:
        raise MissingDerivative("frac_taylor_coeffs needs an expression-backed function")
    fp = differentiate(f.expr)
    eps = Var("x")
    shifted = Add(Const(float(x)), Mul(Const(float(dir.sign)), eps))
    return Mul(Pow(eps, Const(1.0 - alpha)), substitute(fp, "x", shifted))


def frac_taylor_coeffs(f: RealFn, x: float, alpha: float, n: int, dir: Direction = Direction.FORWARD,
                       schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL,
                       dps: int = DEFAULT_DPS, strict: bool = True) -> FracSeries:
    """Coefficients ``c_0..c_n`` of the mixed-order expansion on the ``alpha + k`` ladder.

    Args:
        f: Expression-backed function, differentiable on the open one-sided
            neighbourhood of ``x``.
        alpha: Fractional grade in ``(0, 1)``.
        n: Highest coefficient index.
        dps: Working precision (decimal digits) for sampling the symbolic
            ``eps``-derivatives.
        strict: Raise on the first non-converged coefficient.

    Raises:
        MissingDerivative: ``f`` is not expression-backed.
        NonConvergent: A coefficient limit failed; ``what`` names its index.
    """
    _check_alpha(alpha)
    if n < 0:
        raise ValueError("n must be non-negative")
    schedule = schedule or EpsSchedule()
    sign = dir.sign
    g = _kernel_expr(f, x, alpha, dir)
    coeffs_hp, estimates = [], []
    with mpmath.workdps(dps):
        steps = schedule.steps_mp()
        f0 = f.eval_mp(x, dps)
        for k in range(n + 1):
            gk = RealFn(expr=g)
            samples = [(e, gk.eval_mp(e, dps)) for e in steps]
            scale = max(1.0, float(abs(samples[0][1])))
            noise = scale * 10.0 ** (_NOISE_DIGITS - dps) * float(steps[-1]) ** -k
            est = extrapolate(samples, tol, noise)
            if strict and not est.converged:
                raise NonConvergent(est, f"coefficient c_{k}")
            c = sign * est.value / (math.factorial(k) * (k + mpmath.mpf(alpha)))
            coeffs_hp.append(+c)
            estimates.append(est)
            g = differentiate(g)
    return FracSeries(
        base_x=x,
        f_at_base=float(f0),
        alpha=alpha,
        coeffs=tuple(float(c) for c in coeffs_hp),
        dir=dir,
        ladder=Ladder.ALPHA_PLUS_K,
        coeffs_hp=tuple(coeffs_hp),
        estimates=tuple(estimates),
        f_at_base_hp=f0,
    )


def compound_power_coeffs(g: RealFn, alpha: float, n: int, dir: Direction = Direction.FORWARD,
                          dps: int = DEFAULT_DPS) -> FracSeries:
    """Expansion of ``f(x) = g(x**alpha)`` about ``x = 0`` on the ``alpha * k`` ladder.

    The coefficients are ordinary Taylor coefficients of ``g`` at ``u = 0``;
    the backward side substitutes ``u = -eps**alpha`` (odd extension of the
    inner power), which flips the sign of odd terms.

    Raises:
        MissingDerivative: ``g`` has no derivative chain of order ``n``.
    """
    _check_alpha(alpha)
    if n < 0:
        raise ValueError("n must be non-negative")
    sign = dir.sign
    hp = []
    with mpmath.workdps(dps):
        for k in range(n + 1):
            gk = g.derivative(k)
            hp.append(+(sign**k * gk.eval_mp(0, dps) / math.factorial(k)))
    return FracSeries(
        base_x=0.0,
        f_at_base=float(hp[0]),
        alpha=alpha,
        coeffs=tuple(float(c) for c in hp),
        dir=dir,
        ladder=Ladder.ALPHA_TIMES_K,
        coeffs_hp=tuple(hp),
        f_at_base_hp=hp[0],
    )


def residual_quotient_coeffs(f: RealFn, x: float, alpha: float, n: int, dir: Direction = Direction.FORWARD,
                             schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL,
                             dps: int = DEFAULT_DPS) -> list[LimitEstimate]:
    """Brute-force coefficients ``c_k = lim (f(x +- eps) - T_{k-1}(eps)) / eps**(alpha+k)``.

    Each coefficient subtracts the previously extrapolated ones, so errors
    compound with ``k``; this is an independent cross-check of
    :func:`frac_taylor_coeffs` for small ``k``, not a production path.
    """
    _check_alpha(alpha)
    schedule = schedule or EpsSchedule()
    sign = dir.sign
    out: list[LimitEstimate] = []
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        steps = schedule.steps_mp()
        f0 = f.eval_mp(x, dps)
        rem = [f.eval_mp(mpmath.mpf(x) + sign * e, dps) - f0 for e in steps]
        for k in range(n + 1):
            est = extrapolate([(e, r / e ** (a + k)) for e, r in zip(steps, rem)], tol)
            out.append(est)
            rem = [r - est.value * e ** (a + k) for e, r in zip(steps, rem)]
    return out


def eval_series(s: FracSeries, eps: float, precise: bool = False):
    """Value of the truncated series at step ``eps >= 0``.

    For a backward series this approximates ``f(base_x - eps)``. With
    ``precise=True`` the high-precision coefficients are summed in mpmath at
    the caller's working precision and an ``mpf`` is returned.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if precise and s.coeffs_hp is not None:
        e = mpmath.mpf(eps)
        total = mpmath.mpf(s.f_at_base_hp if s.f_at_base_hp is not None else s.f_at_base)
        if e == 0:
            return total
        a = mpmath.mpf(s.alpha)
        for k, _, _ in s.terms():
            p = a * k if s.ladder is Ladder.ALPHA_TIMES_K else a + k
            total += s.coeffs_hp[k] * e**p
        return total
    total = s.f_at_base
    if eps == 0:
        return total
    for _, p, c in s.terms():
        total += c * eps**p
    return total


def error_curve(f: RealFn, s: FracSeries, eps_grid: Sequence[float], precise: bool = True,
                dps: int = DEFAULT_DPS) -> ErrorCurve:
    """``|f(x +- eps) - eval_series(s, eps)|`` on a grid of positive steps.

    Truncation errors of high-order expansions sit far below double
    precision near 0, so by default both sides are evaluated in mpmath.
    Points where ``f`` is undefined are skipped and listed in ``skipped``.
    """
    sign = s.dir.sign
    points, skipped = [], []
    for eps in eps_grid:
        if not eps > 0:
            raise ValueError(f"grid points must be positive, got {eps}")
        try:
            if precise:
                with mpmath.workdps(dps):
                    exact = f.eval_mp(mpmath.mpf(s.base_x) + sign * mpmath.mpf(eps), dps)
                    err = abs(exact - eval_series(s, eps, precise=True))
            else:
                err = abs(f(s.base_x + sign * eps) - eval_series(s, eps))
        except DomainError:
            skipped.append(eps)
            continue
        points.append((float(eps), float(err)))
    return ErrorCurve(tuple(points), tuple(skipped))
