"""Co-variation, the Holder chain rule and the Taylor-Ito compound rule.

For ``w`` of grade 1/2 at ``x`` and ``f(x, w)`` twice differentiable, the
regularized derivative of ``h(t) = f(t, w(t))`` splits as

    d^+- h = f_x + f_w d^+- w +- 1/2 f_ww [w, w]^+-

where ``d^+- w`` is the 1/2-regularized derivative of ``w`` and the
co-variation ``[w, w]^+-`` is the limit of ``(Delta^+- w)**2 / eps``.
:func:`ito_derivative` assembles the right-hand side from these ingredients
and checks it against the regularized derivative of ``h`` computed directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import mpmath

from holderkit.diffops import Direction, check_beta
from holderkit.errors import InconsistentLimits, NonConvergent
from holderkit.exprlang import Expr, RealFn, differentiate, evaluate, evaluate_mp, parse, substitute, to_text
from holderkit.limits import DEFAULT_TOL, EpsSchedule, LimitEstimate
from holderkit.regularize import DEFAULT_DPS, _Sampler, regularized_derivative
from holderkit.velocity import fractional_velocity

__all__ = [
    "Compound2Fn",
    "Covariation",
    "ItoResult",
    "ItoStep",
    "compose",
    "covariation",
    "chain_velocity",
    "ito_derivative",
    "ito_step",
]

VARIABLES = ("x", "w")


@dataclass(frozen=True)
class Compound2Fn:
    """A function ``f(x, w)`` with symbolic first and second partials."""

    expr: Expr
    label: str = ""
    partials: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        dx = differentiate(self.expr, "x")
        dw = differentiate(self.expr, "w")
        self.partials.update({
            "x": dx,
            "w": dw,
            "ww": differentiate(dw, "w"),
            "xw": differentiate(dx, "w"),
            "xx": differentiate(dx, "x"),
        })

    @classmethod
    def from_expr(cls, source: str | Expr) -> "Compound2Fn":
        if isinstance(source, str):
            return cls(parse(source, variables=VARIABLES), label=source)
        return cls(source, label=to_text(source))

    def __call__(self, x: float, w: float) -> float:
        return evaluate(self.expr, {"x": x, "w": w})

    def partial(self, which: str, x: float, w: float) -> float:
        """Value of the partial ``which`` in ``{x, w, ww, xw, xx}`` at ``(x, w)``."""
        return evaluate(self.partials[which], {"x": x, "w": w})

    def partial_expr(self, which: str) -> Expr:
        return self.partials[which]

    def __str__(self) -> str:
        return self.label or to_text(self.expr)


def compose(f: Compound2Fn, w: RealFn) -> RealFn:
    """The scalar composite ``h(t) = f(t, w(t))``.

    With an expression-backed ``w`` the result is expression-backed too, so it
    keeps symbolic derivatives and high-precision evaluation.
    """
    if w.expr is not None:
        return RealFn(expr=substitute(f.expr, "w", w.expr), label=f"{f}|w={w}")

    def h(t):
        return f(t, w(t))

    mp_h = None
    if w.mp_func is not None:
        def mp_h(t):
            return evaluate_mp(f.expr, {"x": t, "w": w.mp_func(t)}, mpmath.mp.dps)

    return RealFn.from_callable(h, mp_func=mp_h, label=f"{f}|w={w}")


def _compose_outer(f_outer: RealFn, w: RealFn) -> RealFn:
    if f_outer.expr is not None and w.expr is not None:
        return RealFn(expr=substitute(f_outer.expr, "x", w.expr), label=f"({f_outer})o({w})")
    return RealFn.from_callable(lambda t: f_outer(w(t)), label=f"({f_outer})o({w})")


@dataclass(frozen=True)
class Covariation:
    value: float
    dir: Direction
    estimate: LimitEstimate

    @property
    def converged(self) -> bool:
        return self.estimate.converged


def covariation(w: RealFn, x: float, dir: Direction = Direction.FORWARD,
                schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL,
                dps: int | None = DEFAULT_DPS, strict: bool = True) -> Covariation:
    """One-sided co-variation ``lim (Delta w)**2 / eps``.

    Raises:
        NonConvergent: With ``strict`` when the limit does not converge.
    """
    schedule = schedule or EpsSchedule()
    sm = _Sampler(w, x, dir, schedule, dps)
    with sm.ctx:
        vals = [d * d / e for e, d in zip(sm.steps, sm.deltas)]
    est = sm.limit(vals, tol, 1.0)
    if strict and not est.converged:
        raise NonConvergent(est, "co-variation")
    value = float(est.value)
    if abs(value) <= tol:
        value = 0.0
    return Covariation(value, dir, est)


def chain_velocity(f_outer: RealFn, w: RealFn, x: float, beta: float, dir: Direction = Direction.FORWARD,
                   schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL) -> float:
    """Velocity of ``f_outer(w(t))`` at ``x`` by the chain rule ``f_outer'(w(x)) * D^beta w``.

    The velocity of the composite is also computed directly and must agree
    within ``10 * tol``.

    Raises:
        NonConvergent: Either velocity fails to converge.
        MissingDerivative: ``f_outer`` has no derivative.
        InconsistentLimits: The two values disagree.
    """
    check_beta(beta)
    schedule = schedule or EpsSchedule()
    vw = fractional_velocity(w, x, beta, dir, schedule, tol).value
    value = f_outer.derivative(1)(w(x)) * vw
    direct = fractional_velocity(_compose_outer(f_outer, w), x, beta, dir, schedule, tol).value
    if abs(value - direct) > 10 * tol * max(1.0, abs(value)):
        raise InconsistentLimits("chain rule vs direct composite velocity", value, direct, 10 * tol)
    return value


class ItoResult(NamedTuple):
    """Assembled right-hand side, the direct regularized derivative, and the ingredients."""

    rhs: float
    direct: float
    parts: dict


def _ingredient(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except NonConvergent as exc:
        raise NonConvergent(exc.estimate, f"{name} ({exc.what})") from None


def ito_derivative(f: Compound2Fn, w: RealFn, x: float, dir: Direction = Direction.FORWARD,
                   schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL,
                   dps: int | None = DEFAULT_DPS, check: bool = True) -> ItoResult:
    """Regularized derivative of ``f(t, w(t))`` at ``x`` by the compound rule.

    Args:
        check: Raise :class:`InconsistentLimits` when the assembled value and
            the direct one differ by more than ``10 * tol``.

    Raises:
        NonConvergent: An ingredient failed; the message names it.
    """
    schedule = schedule or EpsSchedule()
    s = dir.sign
    wx = w(x)
    fx, fw, fww = (f.partial(p, x, wx) for p in ("x", "w", "ww"))
    rw = _ingredient("regularized derivative of w", regularized_derivative, w, x, 0.5, dir, schedule, tol, dps)
    cov = _ingredient("co-variation of w", covariation, w, x, dir, schedule, tol, dps)
    rhs = fx + fw * rw.value + s * 0.5 * fww * cov.value

    h = compose(f, w)
    k_h = fw * rw.kernel_constant
    sm = _Sampler(h, x, dir, schedule, dps)
    with sm.ctx:
        vals = [(d - k_h * sm.power(e, 0.5)) / e for e, d in zip(sm.steps, sm.deltas)]
    est = sm.limit(vals, tol, 1.0)
    if not est.converged:
        raise NonConvergent(est, "direct regularized derivative of the composite")
    direct = float(est.value)
    if check and abs(rhs - direct) > 10 * tol * max(1.0, abs(rhs)):
        raise InconsistentLimits("assembled compound rule vs direct composite", rhs, direct, 10 * tol)
    parts = {
        "f_x": fx,
        "f_w": fw,
        "f_ww": fww,
        "reg_w": rw.value,
        "velocity_w": rw.kernel_constant,
        "covariation": cov.value,
        "kernel_h": k_h,
    }
    return ItoResult(rhs, direct, parts)


class ItoStep(NamedTuple):
    predicted: float
    actual: float
    residual: float


def ito_step(f: Compound2Fn, w: RealFn, x: float, eps: float, dir: Direction = Direction.FORWARD,
             schedule: EpsSchedule | None = None, tol: float = DEFAULT_TOL) -> ItoStep:
    """One-step prediction of the composite increment from the compound rule.

    ``predicted = eps (f_x + f_w dw) + sqrt(eps) f_w D^{1/2} w +- (eps/2) f_ww (Delta w)**2 / eps``
    is compared with the actual one-sided increment of ``h(t) = f(t, w(t))``
    (forward ``h(x+eps) - h(x)``, backward ``h(x) - h(x-eps)``). Here ``dw``
    is the regularized derivative of ``w``; it is 0 for a pure square-root
    grade and restores the classical first-order term when ``w`` is smooth.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return ItoStep(0.0, 0.0, 0.0)
    s = dir.sign
    wx = w(x)
    fx, fw, fww = (f.partial(p, x, wx) for p in ("x", "w", "ww"))
    rw = regularized_derivative(w, x, 0.5, dir, schedule, tol)
    vel, reg = rw.kernel_constant, (0.0 if abs(rw.value) <= tol else rw.value)
    dw = s * (w(x + s * eps) - wx)
    predicted = eps * (fx + fw * reg) + math.sqrt(eps) * fw * vel + s * 0.5 * fww * dw * dw
    actual = s * (f(x + s * eps, w(x + s * eps)) - f(x, wx))
    return ItoStep(predicted, actual, actual - predicted)
