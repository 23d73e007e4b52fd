"""Fractional velocities and pointwise Holder exponents.

The fractional velocity of order ``beta`` is the one-sided limit of the
fractal variation ``delta(f, x, eps) / eps**beta``. For mixed orders
``n + beta`` three routes are available:

``definition``
    limit of :func:`~holderkit.diffops.mixed_variation`;
``modular``
    ``(n+1)! / prod_{j=1..n}(j+beta) * lim delta(f^(n), x, eps) / eps**beta``;
``continuous``
    ``(n+1)! / prod_{j=0..n}(j+beta) * lim eps**(1-beta) f^(n+1)(x +- eps)``.

They agree whenever all three limits exist, which the test-suite checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import mpmath

from holderkit.diffops import (
    Direction,
    VariationSample,
    check_beta,
    delta,
    frac_variation,
    mixed_variation,
    normalization,
)
from holderkit.errors import DegenerateData, NonConvergent
from holderkit.exprlang import RealFn
from holderkit.limits import DEFAULT_TOL, EpsSchedule, LimitEstimate, Status, extrapolate, loglog_fit

__all__ = [
    "Route",
    "FracVelocity",
    "HolderReport",
    "fractional_velocity",
    "mixed_velocity",
    "holder_exponent",
]

#: Slopes within this distance of 1 (or above) are read as differentiability.
DIFFERENTIABLE_SNAP = 0.02


class Route(str, enum.Enum):
    DEFINITION = "definition"
    MODULAR = "modular"
    CONTINUOUS = "continuous"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FracVelocity:
    """A one-sided velocity of order ``order_n + order_beta`` with its limit diagnostics."""

    order_n: int
    order_beta: float
    dir: Direction
    estimate: LimitEstimate
    route: Route = Route.DEFINITION

    @property
    def value(self) -> float:
        return float(self.estimate.value)

    @property
    def converged(self) -> bool:
        return self.estimate.converged


@dataclass(frozen=True)
class HolderReport:
    alpha_hat: float
    dir: Direction
    velocity_at_alpha: FracVelocity
    slope_fit_residual: float
    prefactor: float
    raw_slope: float
    flagged: bool = False


def _finish(vel: FracVelocity, strict: bool, what: str) -> FracVelocity:
    if strict and not vel.converged:
        raise NonConvergent(vel.estimate, what)
    return vel


def fractional_velocity(f: RealFn, x: float, beta: float, dir: Direction = Direction.FORWARD,
                        schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL,
                        strict: bool = True, dps: int | None = None) -> FracVelocity:
    """One-sided fractional velocity of order ``beta`` at ``x``.

    Args:
        strict: Raise :class:`NonConvergent` unless the limit converged. With
            ``strict=False`` the non-converged estimate is returned instead.
        dps: Evaluate the variation with mpmath at this many digits; the
            estimate then carries an ``mpf`` value.

    Raises:
        UnsupportedExponent: ``beta`` outside ``(0, 1]``.
        NonConvergent: See ``strict``.
        DomainError: ``f`` cannot be evaluated on the sampled side.
    """
    check_beta(beta)
    schedule = schedule or EpsSchedule()
    if dps is None:
        samples = [frac_variation(f, x, e, beta, dir) for e in schedule.steps()]
        est = extrapolate(samples, tol)
    else:
        with mpmath.workdps(dps):
            samples = [frac_variation(f, x, e, beta, dir, dps) for e in schedule.steps_mp()]
            est = extrapolate(samples, tol)
    return _finish(FracVelocity(0, beta, dir, est, Route.DEFINITION), strict, f"velocity of order {beta}")


def _scaled(est: LimitEstimate, factor: float) -> LimitEstimate:
    return LimitEstimate(est.value * factor, est.residual_gamma, est.status, est.samples_used, est.order)


def mixed_velocity(f: RealFn, x: float, n: int, beta: float, dir: Direction = Direction.FORWARD,
                   schedule: EpsSchedule | None = None, route: Route | str = Route.DEFINITION,
                   tol: float = DEFAULT_TOL, strict: bool = True) -> FracVelocity:
    """Fractional velocity of mixed order ``n + beta`` by the chosen route.

    Raises:
        MissingDerivative: ``modular``/``continuous`` on a function without
            symbolic derivatives (and ``definition`` with ``n > 0``).
        NonConvergent: When ``strict`` and the limit did not converge.
    """
    check_beta(beta)
    if n < 0:
        raise ValueError("n must be non-negative")
    route = Route(route)
    schedule = schedule or EpsSchedule()
    steps = schedule.steps()
    fact = math.factorial(n + 1)
    if route is Route.DEFINITION:
        est = extrapolate([mixed_variation(f, x, e, n, beta, dir) for e in steps], tol)
    elif route is Route.MODULAR:
        fn = f.derivative(n)
        samples = [VariationSample(e, delta(fn, x, e, dir) / e**beta) for e in steps]
        est = _scaled(extrapolate(samples, tol), fact / normalization(n, beta, "partial"))
    else:
        fn1 = f.derivative(n + 1)
        s = dir.sign
        samples = [VariationSample(e, e ** (1 - beta) * fn1(x + s * e)) for e in steps]
        est = _scaled(extrapolate(samples, tol), fact / normalization(n, beta, "full"))
    vel = FracVelocity(n, beta, dir, est, route)
    return _finish(vel, strict, f"velocity of order {n}+{beta} ({route} route)")


def holder_exponent(f: RealFn, x: float, dir: Direction = Direction.FORWARD,
                    schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL) -> HolderReport:
    """Estimate the pointwise Holder exponent of ``f`` at ``x`` from one side.

    The exponent is the log-log slope of ``|delta(f, x, eps)|`` against
    ``eps``, clamped to ``(0, 1]``; slopes within ``DIFFERENTIABLE_SNAP`` of 1
    or larger are reported as 1 (differentiable). The velocity at the
    estimated exponent is attached without raising on non-convergence.

    A function that is constant on the sampled range gives ``alpha_hat = 1``
    and a zero velocity, with ``flagged=True``.
    """
    schedule = schedule or EpsSchedule()
    steps = schedule.steps()
    deltas = [delta(f, x, e, dir) for e in steps]
    if all(d == 0 for d in deltas):
        est = LimitEstimate(0.0, 0.0, Status.CONVERGED, len(steps))
        vel = FracVelocity(0, 1.0, dir, est)
        return HolderReport(1.0, dir, vel, 0.0, 0.0, math.inf, flagged=True)
    if any(d == 0 for d in deltas):
        raise DegenerateData("some increments vanish exactly; no power law to fit")
    fit = loglog_fit([(e, abs(d)) for e, d in zip(steps, deltas)])
    alpha = fit.slope
    if alpha >= 1 - DIFFERENTIABLE_SNAP:
        alpha = 1.0
    if alpha <= 0:
        raise DegenerateData(f"non-positive log-log slope {fit.slope:.3g}: increments do not vanish")
    vel = fractional_velocity(f, x, alpha, dir, schedule, tol, strict=False)
    return HolderReport(alpha, dir, vel, fit.rms_residual, fit.prefactor, fit.slope)
