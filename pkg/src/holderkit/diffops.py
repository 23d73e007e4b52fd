"""Difference operators and the eps-parameterized variation quotients.

Everything here is a plain function of a single step ``eps``; the limits
``eps -> 0+`` are taken elsewhere (:mod:`holderkit.limits`).

Passing ``dps`` to the quotient functions evaluates the function with mpmath
at that many digits and returns an ``mpf``; this removes the cancellation in
``f(x+eps) - f(x)`` when the remainder is far below double precision.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import mpmath

from holderkit.errors import UnsupportedExponent
from holderkit.exprlang import RealFn

__all__ = [
    "Direction",
    "VariationSample",
    "delta",
    "delta2",
    "frac_variation",
    "taylor_poly",
    "mixed_variation",
    "normalization",
    "check_beta",
]


class Direction(enum.Enum):
    """Side from which a one-sided quantity is taken."""

    FORWARD = 1
    BACKWARD = -1

    @property
    def sign(self) -> int:
        return self.value

    @property
    def short(self) -> str:
        return "fwd" if self is Direction.FORWARD else "bwd"

    @classmethod
    def parse(cls, text: "str | Direction") -> "Direction":
        if isinstance(text, Direction):
            return text
        key = text.strip().lower()
        if key in ("fwd", "forward", "+"):
            return cls.FORWARD
        if key in ("bwd", "backward", "-"):
            return cls.BACKWARD
        raise ValueError(f"unknown direction {text!r}")


class VariationSample(NamedTuple):
    """A quotient evaluated at one step; unpacks as ``(eps, value)``."""

    eps: float
    value: float

    @property
    def finite(self) -> bool:
        if isinstance(self.value, mpmath.mpf):
            return bool(mpmath.isfinite(self.value))
        return math.isfinite(self.value)


def check_beta(beta: float) -> None:
    if not (0 < beta <= 1):
        raise UnsupportedExponent(f"fractional order must lie in (0, 1], got {beta}")


def _f(f: RealFn, x, dps: int | None):
    return f(x) if dps is None else f.eval_mp(x, dps)


def _shift(x, eps, dps):
    if dps is None:
        return x, eps
    return mpmath.mpf(x), mpmath.mpf(eps)


def delta(f: RealFn, x: float, eps: float, dir: Direction = Direction.FORWARD, dps: int | None = None):
    """Forward ``f(x+eps) - f(x)`` or backward ``f(x) - f(x-eps)`` difference."""
    if dps is not None:
        with mpmath.workdps(dps):
            xm, em = _shift(x, eps, dps)
            if dir is Direction.FORWARD:
                return _f(f, xm + em, dps) - _f(f, xm, dps)
            return _f(f, xm, dps) - _f(f, xm - em, dps)
    if dir is Direction.FORWARD:
        return f(x + eps) - f(x)
    return f(x) - f(x - eps)


def delta2(f: RealFn, x: float, eps: float) -> float:
    """Second central difference ``f(x+eps) - 2 f(x) + f(x-eps)``."""
    return f(x + eps) - 2.0 * f(x) + f(x - eps)


def frac_variation(f: RealFn, x: float, eps: float, beta: float,
                   dir: Direction = Direction.FORWARD, dps: int | None = None) -> VariationSample:
    """Fractal variation ``delta(f, x, eps, dir) / eps**beta``."""
    check_beta(beta)
    d = delta(f, x, eps, dir, dps)
    if dps is None:
        return VariationSample(eps, d / eps**beta)
    with mpmath.workdps(dps):
        return VariationSample(eps, d / mpmath.mpf(eps) ** mpmath.mpf(beta))


def taylor_poly(f: RealFn, x: float, n: int, eps: float, dps: int | None = None):
    """Ordinary Taylor polynomial ``f(x) + sum_{k<=n} f^(k)(x) eps^k / k!``.

    ``eps`` may be negative; ``taylor_poly(f, x, n, -eps)`` is the backward form.

    Raises:
        MissingDerivative: If ``f`` has no derivative chain of order ``n``.
    """
    if n < 0:
        raise ValueError("Taylor order must be non-negative")
    if dps is None:
        total = f(x)
        for k in range(1, n + 1):
            total += f.derivative(k)(x) * eps**k / math.factorial(k)
        return total
    with mpmath.workdps(dps):
        xm, em = mpmath.mpf(x), mpmath.mpf(eps)
        total = f.eval_mp(xm, dps)
        for k in range(1, n + 1):
            total += f.derivative(k).eval_mp(xm, dps) * em**k / math.factorial(k)
        return total


def mixed_variation(f: RealFn, x: float, eps: float, n: int, beta: float,
                    dir: Direction = Direction.FORWARD, dps: int | None = None) -> VariationSample:
    """Variation quotient of mixed order ``n + beta``.

    Forward: ``(n+1)! (f(x+eps) - T_n(x, eps)) / eps**(n+beta)``.
    Backward: ``(-1)**n (n+1)! (T_n(x, -eps) - f(x-eps)) / eps**(n+beta)``.
    With ``n == 0`` this is exactly :func:`frac_variation`.
    """
    check_beta(beta)
    if n < 0:
        raise ValueError("integer order n must be non-negative")
    if n == 0:
        return frac_variation(f, x, eps, beta, dir, dps)
    scale = math.factorial(n + 1)
    if dps is None:
        if dir is Direction.FORWARD:
            num = f(x + eps) - taylor_poly(f, x, n, eps)
        else:
            num = (-1) ** n * (taylor_poly(f, x, n, -eps) - f(x - eps))
        return VariationSample(eps, scale * num / eps ** (n + beta))
    with mpmath.workdps(dps):
        xm, em = mpmath.mpf(x), mpmath.mpf(eps)
        if dir is Direction.FORWARD:
            num = f.eval_mp(xm + em, dps) - taylor_poly(f, x, n, em, dps)
        else:
            num = (-1) ** n * (taylor_poly(f, x, n, -em, dps) - f.eval_mp(xm - em, dps))
        return VariationSample(eps, scale * num / em ** (n + mpmath.mpf(beta)))


def normalization(n: int, beta: float, variant: str = "partial") -> float:
    """Falling-product normalizer of the l'Hopital routes to mixed velocities.

    ``partial`` is ``prod_{j=1..n} (j + beta)`` (the divisor of the route via
    the n-th derivative's increment); ``full`` is ``prod_{j=0..n} (j + beta)``
    (the route via ``eps**(1-beta) f^(n+1)``). Empty products are 1.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    start = {"partial": 1, "full": 0}.get(variant)
    if start is None:
        raise ValueError(f"variant must be 'partial' or 'full', got {variant!r}")
    return math.prod(j + beta for j in range(start, n + 1))
