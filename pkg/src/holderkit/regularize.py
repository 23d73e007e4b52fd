"""Regularized derivatives at points where only a fractional velocity exists.

If ``f(x + eps) = f(x) + K eps**beta + (regular part)``, subtracting the
kernel ``K eps**beta`` (``K`` the ``beta``-velocity) leaves an increment whose
ordinary difference quotient converges. The same subtraction with a general
denominator ``eps**(alpha+beta)`` gives the composition of variations, and a
whole ladder of grades ``alpha_1 < ... < alpha_m`` can be removed at once.

Functions with an mpmath evaluator (every expression-backed ``RealFn``) are
sampled at ``dps`` digits: the subtraction cancels the leading grade, which
in doubles would leave only a few significant digits at the smallest steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import mpmath

from holderkit.diffops import Direction, check_beta
from holderkit.errors import (
    DomainError,
    InconsistentLimits,
    NonConvergent,
    PreconditionFailed,
    ZeroDenominatorVelocity,
)
from holderkit.exprlang import RealFn
from holderkit.limits import DEFAULT_TOL, EpsSchedule, LimitEstimate, extrapolate
from holderkit.velocity import fractional_velocity

__all__ = [
    "RegularizedDerivative",
    "ExponentLadder",
    "LhopitalResult",
    "Orthogonality",
    "kernel_residual",
    "composition_variation",
    "regularized_derivative",
    "multi_regularized_derivative",
    "frac_lhopital",
    "orthogonality_check",
]

DEFAULT_DPS = 40


@dataclass(frozen=True)
class RegularizedDerivative:
    value: float
    dir: Direction
    beta_used: float
    kernel_constant: float
    estimate: LimitEstimate

    @property
    def converged(self) -> bool:
        return self.estimate.converged


class Orthogonality(NamedTuple):
    velocity: float
    reg_deriv: float
    product: float


@dataclass(frozen=True)
class LhopitalResult:
    """Velocity ratio ``value`` and the independently extrapolated ``direct`` ratio."""

    value: float
    direct: float
    velocity_f: float
    velocity_g: float


def _precise(f: RealFn) -> bool:
    return f.expr is not None or f.mp_func is not None


class _Sampler:
    """One-sided increments ``Delta(eps)`` of ``f`` on a schedule, in mp when possible."""

    def __init__(self, f: RealFn, x: float, dir: Direction, schedule: EpsSchedule, dps: int | None):
        self.dps = dps if (dps and _precise(f)) else None
        self.ctx = mpmath.workdps(self.dps) if self.dps else _NullCtx()
        with self.ctx:
            self.steps = schedule.steps_mp() if self.dps else schedule.steps()
            self.f0 = self._f(f, x)
            s = dir.sign
            # forward: f(x+eps) - f(x); backward: f(x) - f(x-eps)
            self.deltas = [s * (self._f(f, self._add(x, s * e)) - self.f0) for e in self.steps]

    def _f(self, f, x):
        return f.eval_mp(x, self.dps) if self.dps else f(x)

    def _add(self, x, e):
        return mpmath.mpf(x) + e if self.dps else x + e

    def power(self, e, p):
        return e ** mpmath.mpf(p) if self.dps else e**p

    def limit(self, values, tol: float, power: float = 0.0) -> LimitEstimate:
        """Extrapolate ``values``, which are increments divided by ``eps**power``.

        Rounding in the increments is amplified by ``eps**-power``; that level
        is handed to the extrapolator as known noise.
        """
        with self.ctx:
            unit = 10.0 ** -self.dps if self.dps else 2.0**-52
            scale = max(1.0, abs(float(self.f0)), max(abs(float(d)) for d in self.deltas))
            noise = 64 * unit * scale * float(self.steps[-1]) ** -power
            return extrapolate(list(zip(self.steps, values)), tol, noise)


class _NullCtx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _kernel(f, x, beta, dir, schedule, tol, dps) -> tuple:
    """Velocity of order ``beta``, snapped to 0 below ``tol``; raises if it does not converge."""
    vel = fractional_velocity(f, x, beta, dir, schedule, tol, strict=True,
                              dps=dps if _precise(f) else None)
    k = vel.estimate.value
    return (0 if abs(k) <= tol else k), vel


def kernel_residual(f: RealFn, x: float, beta: float, dir: Direction = Direction.FORWARD,
                    schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL,
                    dps: int | None = DEFAULT_DPS) -> LimitEstimate:
    """Limit of ``(Delta f - K eps**beta) / eps**beta``, which vanishes whenever ``K`` exists."""
    check_beta(beta)
    schedule = schedule or EpsSchedule()
    K, _ = _kernel(f, x, beta, dir, schedule, tol, dps)
    sm = _Sampler(f, x, dir, schedule, dps)
    with sm.ctx:
        vals = [(d - K * sm.power(e, beta)) / sm.power(e, beta) for e, d in zip(sm.steps, sm.deltas)]
    return sm.limit(vals, tol, beta)


def composition_variation(f: RealFn, x: float, alpha: float, beta: float,
                          dir: Direction = Direction.FORWARD, schedule: EpsSchedule | None = None,
                          tol: float = DEFAULT_TOL, dps: int | None = DEFAULT_DPS) -> LimitEstimate:
    """Limit of ``(Delta f - K eps**beta) / eps**(alpha+beta)`` with ``K`` the ``beta``-velocity.

    Divergence of the outer limit is a legitimate outcome (``alpha`` above the
    next grade of ``f``) and is reported through ``status``, not raised.

    Raises:
        NonConvergent: The inner velocity ``K`` does not exist.
    """
    check_beta(alpha)
    check_beta(beta)
    schedule = schedule or EpsSchedule()
    K, _ = _kernel(f, x, beta, dir, schedule, tol, dps)
    sm = _Sampler(f, x, dir, schedule, dps)
    with sm.ctx:
        vals = [(d - K * sm.power(e, beta)) / sm.power(e, alpha + beta) for e, d in zip(sm.steps, sm.deltas)]
    return sm.limit(vals, tol, alpha + beta)


def regularized_derivative(f: RealFn, x: float, beta: float, dir: Direction = Direction.FORWARD,
                           schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL,
                           dps: int | None = DEFAULT_DPS, strict: bool = True) -> RegularizedDerivative:
    """One-sided derivative of ``f`` after removing its ``beta``-grade kernel.

    ``value = lim (Delta f - K eps**beta) / eps``; for ``f`` differentiable at
    ``x`` the kernel is 0 and this is the classical one-sided derivative.

    Raises:
        NonConvergent: The velocity ``K`` or (with ``strict``) the regularized
            quotient does not converge.
    """
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    schedule = schedule or EpsSchedule()
    K, _ = _kernel(f, x, beta, dir, schedule, tol, dps)
    sm = _Sampler(f, x, dir, schedule, dps)
    with sm.ctx:
        vals = [(d - K * sm.power(e, beta)) / e for e, d in zip(sm.steps, sm.deltas)]
    est = sm.limit(vals, tol, 1.0)
    if strict and not est.converged:
        raise NonConvergent(est, f"regularized derivative of order {beta}")
    return RegularizedDerivative(float(est.value), dir, beta, float(K), est)


@dataclass(frozen=True)
class ExponentLadder:
    """Increasing grades ``alpha_1 < ... < alpha_m`` in ``(0, 1)`` with their velocities.

    ``forward[i]`` and ``backward[i]`` are the one-sided velocities of the
    remainder after the lower grades were subtracted; ``None`` means not yet
    measured (see :meth:`measure`).
    """

    exponents: tuple[float, ...]
    forward: tuple[float, ...] | None = None
    backward: tuple[float, ...] | None = None

    def __post_init__(self):
        ex = tuple(float(a) for a in self.exponents)
        object.__setattr__(self, "exponents", ex)
        if not ex:
            raise ValueError("ladder needs at least one exponent")
        if any(not 0 < a < 1 for a in ex):
            raise ValueError(f"ladder exponents must lie in (0, 1): {ex}")
        if any(b <= a for a, b in zip(ex, ex[1:])):
            raise ValueError(f"ladder exponents must be strictly increasing: {ex}")
        for side in (self.forward, self.backward):
            if side is not None and len(side) != len(ex):
                raise ValueError("velocities must match the exponents one to one")

    @property
    def sup(self) -> float:
        return self.exponents[-1]

    def velocities(self, dir: Direction) -> tuple[float, ...] | None:
        return self.forward if dir is Direction.FORWARD else self.backward

    def measure(self, f: RealFn, x: float, schedule: EpsSchedule | None = None,
                tol: float = DEFAULT_TOL, dps: int | None = DEFAULT_DPS,
                dirs: Sequence[Direction] = (Direction.FORWARD, Direction.BACKWARD)) -> "ExponentLadder":
        """Return a copy with velocities measured on the requested sides.

        Raises:
            NonConvergent: A grade's velocity does not exist.
            DomainError: ``f`` is undefined on a requested side.
        """
        schedule = schedule or EpsSchedule()
        found = {Direction.FORWARD: self.forward, Direction.BACKWARD: self.backward}
        for d in dirs:
            found[d] = tuple(float(c) for c in _ladder_velocities(f, x, self.exponents, d, schedule, tol, dps))
        return ExponentLadder(self.exponents, found[Direction.FORWARD], found[Direction.BACKWARD])


def _ladder_velocities(f, x, exponents, dir, schedule, tol, dps) -> list:
    sm = _Sampler(f, x, dir, schedule, dps)
    out = []
    with sm.ctx:
        rem = list(sm.deltas)
        for a in exponents:
            est = sm.limit([r / sm.power(e, a) for e, r in zip(sm.steps, rem)], tol, a)
            if not est.converged:
                raise NonConvergent(est, f"ladder velocity of order {a}")
            c = 0 if abs(est.value) <= tol else est.value
            out.append(c)
            rem = [r - c * sm.power(e, a) for e, r in zip(sm.steps, rem)]
    return out


def multi_regularized_derivative(f: RealFn, x: float, ladder: ExponentLadder, n: int,
                                 dir: Direction = Direction.FORWARD, schedule: EpsSchedule | None = None,
                                 tol: float = DEFAULT_TOL, dps: int | None = DEFAULT_DPS,
                                 strict: bool = False) -> RegularizedDerivative:
    """Remove every ladder grade and the integer Taylor terms up to ``n``, then regularize.

    The quotient is ``(+-1)**n (n+1)! R(eps) / eps**(n + beta)`` with ``beta``
    the largest ladder exponent and ``R`` the one-sided increment minus the
    fractional terms ``c_i eps**alpha_i`` and the integer terms
    ``f^(k)(x) (+-eps)**k / k!``. Where ``f^(k)(x)`` is undefined (typical at
    the singular point itself) it is replaced by the limit of the remaining
    increment over ``(+-eps)**k / k!``.

    Velocities missing from ``ladder`` are measured first. The returned
    estimate may be diverged; pass ``strict=True`` to raise instead.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    schedule = schedule or EpsSchedule()
    cs = ladder.velocities(dir)
    if cs is None:
        cs = ladder.measure(f, x, schedule, tol, dps, dirs=(dir,)).velocities(dir)
    beta = ladder.sup
    s = dir.sign
    sm = _Sampler(f, x, dir, schedule, dps)
    with sm.ctx:
        # work with f(x +- eps) - f(x) so integer terms carry (+-eps)**k
        rem = [s * d for d in sm.deltas]
        for a, c in zip(ladder.exponents, cs):
            rem = [r - s * c * sm.power(e, a) for e, r in zip(sm.steps, rem)]
        for k in range(1, n + 1):
            basis = [(s * e) ** k / math.factorial(k) for e in sm.steps]
            try:
                dk = f.derivative(k).eval_mp(x, sm.dps) if sm.dps else f.derivative(k)(x)
            except DomainError:
                est = sm.limit([r / b for r, b in zip(rem, basis)], tol, k)
                if not est.converged:
                    raise NonConvergent(est, f"integer Taylor term of order {k}") from None
                dk = est.value
            rem = [r - dk * b for r, b in zip(rem, basis)]
        scale = s**n * math.factorial(n + 1)
        # (-1)^n (n+1)! (T - f(x-eps)) equals scale * (-R) backward, scale * R forward
        vals = [s * scale * r / sm.power(e, n + beta) for e, r in zip(sm.steps, rem)]
    est = sm.limit(vals, tol, n + beta)
    if strict and not est.converged:
        raise NonConvergent(est, f"multi-regularized derivative of order {n}+{beta}")
    return RegularizedDerivative(float(est.value), dir, beta, float(cs[-1]), est)


def frac_lhopital(f: RealFn, g: RealFn, x: float, beta: float, dir: Direction = Direction.FORWARD,
                  schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL) -> LhopitalResult:
    """Ratio of ``beta``-velocities of ``f`` and ``g`` at a common zero ``x``.

    The direct limit of ``f(x +- eps) / g(x +- eps)`` is extrapolated as well
    and must agree within ``10 * tol``.

    Raises:
        PreconditionFailed: ``f(x)`` or ``g(x)`` is not 0 within ``tol``.
        ZeroDenominatorVelocity: The velocity of ``g`` vanishes.
        InconsistentLimits: The two ratios disagree.
        NonConvergent: A velocity or the direct ratio does not converge.
    """
    check_beta(beta)
    schedule = schedule or EpsSchedule()
    for name, h in (("f", f), ("g", g)):
        if abs(h(x)) > tol:
            raise PreconditionFailed(f"{name}({x}) = {h(x):.6g} is not zero")
    vf = fractional_velocity(f, x, beta, dir, schedule, tol).value
    vg = fractional_velocity(g, x, beta, dir, schedule, tol).value
    if abs(vg) <= tol:
        raise ZeroDenominatorVelocity(f"velocity of g at {x} is {vg:.3g}")
    if abs(vf) <= tol:
        vf = 0.0
    s = dir.sign
    samples = [(e, f(x + s * e) / g(x + s * e)) for e in schedule.steps()]
    est = extrapolate(samples, tol)
    if not est.converged:
        raise NonConvergent(est, "direct ratio f/g")
    value, direct = vf / vg, float(est.value)
    if abs(value - direct) > 10 * tol * max(1.0, abs(value)):
        raise InconsistentLimits("velocity ratio vs direct ratio", value, direct, 10 * tol)
    return LhopitalResult(value, direct, vf, vg)


def orthogonality_check(f: RealFn, x: float, alpha: float, dir: Direction = Direction.FORWARD,
                        schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL) -> Orthogonality:
    """Velocity, regularized derivative and their product at grade ``alpha``.

    For ``f`` carrying a single Holder grade at ``x`` the product is 0; the
    hypothesis is the caller's to assert (``x + sqrt(x)`` violates it and
    gives product 1).
    """
    rd = regularized_derivative(f, x, alpha, dir, schedule, tol)
    reg = 0.0 if abs(rd.value) <= tol else rd.value
    return Orthogonality(rd.kernel_constant, reg, rd.kernel_constant * reg)
