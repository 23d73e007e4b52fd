"""Acceptance criteria, one check per criterion at its stated tolerance.

Runs under pytest (one line per criterion in the terminal summary) or
directly as ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import random
import time

import numpy as np
import pytest

from holderkit import (
    Route,
    compound_power_coeffs,
    error_curve,
    eval_series,
    frac_lhopital,
    frac_taylor_coeffs,
    fractional_velocity,
    ito_derivative,
    kernel_residual,
    loglog_slope,
    mixed_velocity,
    regularized_derivative,
    residual_quotient_coeffs,
)
from holderkit.exprlang import FUNCTIONS, RealFn, differentiate, evaluate, parse, to_text
from holderkit.ito import Compound2Fn

F = RealFn.from_expr
ARCSIN = "asin(1-x)"
ARCSIN_COEFFS = [
    -math.sqrt(2),
    -1 / (3 * 2**1.5),
    -3 / (5 * 2**4.5),
    -5 / (7 * 2**6.5),
    -35 / (9 * 2**10.5),
]


def c01_arcsin_velocity():
    t0 = time.perf_counter()
    v = fractional_velocity(F(ARCSIN), 0.0, 0.5).value
    dt = time.perf_counter() - t0
    err = abs(v + math.sqrt(2))
    return err <= 1e-3 and dt < 1.0, f"value={v:.12g} err={err:.2e} time={dt:.3f}s"


def c02_arcsin_coefficients():
    s = frac_taylor_coeffs(F(ARCSIN), 0.0, 0.5, 4)
    err = max(abs(c - e) for c, e in zip(s.coeffs, ARCSIN_COEFFS))
    return err <= 1e-6, f"max coefficient error={err:.2e}"


def c03_error_curve():
    s = frac_taylor_coeffs(F(ARCSIN), 0.0, 0.5, 4)
    curve = error_curve(F(ARCSIN), s, np.logspace(-4, -1, 64))
    slope = loglog_slope(curve.points)
    errs = [e for _, e in curve]
    monotone = all(a < b for a, b in zip(errs, errs[1:]))
    return abs(slope - 5.5) <= 0.2 and monotone and not curve.skipped, f"slope={slope:.4f} monotone={monotone}"


def c04_cos_cube_root():
    s = compound_power_coeffs(F("cos(x)"), 1 / 3, 8)
    c1, c2 = s.coeffs[1], s.coeffs[2]
    grid = np.linspace(0.5 / 400, 0.5, 400)
    closed = [1 - x ** (2 / 3) / 2 + x ** (4 / 3) / 24 - x**2 / 720 + x ** (8 / 3) / 40320 for x in grid]
    vs_closed = max(abs(eval_series(s, x) - c) for x, c in zip(grid, closed))
    vs_true = max(abs(c - math.cos(x ** (1 / 3))) for x, c in zip(grid, closed))
    ok = abs(c1) <= 1e-6 and abs(c2 + 0.5) <= 1e-6 and vs_closed < 1e-6 and vs_true < 1e-6
    return ok, f"c1={c1:.3g} c2={c2:.12g} series-vs-closed={vs_closed:.2e} closed-vs-cos={vs_true:.2e}"


def c05_regularization_pair():
    a = regularized_derivative(F(ARCSIN), 0.0, 0.5).value
    b = regularized_derivative(F("x + sqrt(x)"), 0.0, 0.5).value
    return abs(a) <= 1e-4 and abs(b - 1) <= 1e-4, f"asin(1-x): {a:.3g}, x+sqrt(x): {b:.12g}"


def c06_ito_quadratic():
    out, ok = [], True
    for x in (0.0, 0.25):
        r = ito_derivative(Compound2Fn.from_expr("w^2/2"), F("sqrt(x)"), x, check=False)
        ok &= abs(r.rhs - 0.5) <= 1e-4 and abs(r.direct - 0.5) <= 1e-4
        out.append(f"x={x}: rhs={r.rhs:.12g} direct={r.direct:.12g}")
    return ok, "; ".join(out)


def c07_subcritical_vanishing():
    rng = random.Random(20240611)
    worst = 0.0
    for _ in range(50):
        alpha = rng.uniform(0.1, 1.0)
        beta = rng.uniform(0.02, alpha - 0.02) if alpha > 0.04 else alpha / 2
        x0 = rng.uniform(-2.0, 2.0)
        f = RealFn.from_callable(lambda t, a=alpha, c=x0: (t - c) ** a)
        worst = max(worst, abs(fractional_velocity(f, x0, beta).value))
    return worst <= 1e-6, f"50 pairs, max |velocity|={worst:.2e}"


def c08_kernel_regularization():
    corpus = [("x^0.3", 0.3), ("x^0.5", 0.5), ("x^0.8", 0.8), (ARCSIN, 0.5), ("x + sqrt(x)", 0.5)]
    worst, ok = 0.0, True
    for src, beta in corpus:
        est = kernel_residual(F(src), 0.0, beta)
        ok &= est.converged
        worst = max(worst, abs(float(est.value)))
    return ok and worst <= 1e-5, f"{len(corpus)} functions, max |residual limit|={worst:.2e}"


def c09_route_agreement():
    spread = worst = 0.0
    for n in (0, 1, 2):
        for beta in (0.25, 0.5, 0.75):
            f = F(f"x^{n + beta}")
            vals = [mixed_velocity(f, 0.0, n, beta, route=r).value for r in Route]
            spread = max(spread, max(vals) - min(vals))
            worst = max(worst, max(abs(v - math.factorial(n + 1)) for v in vals))
    return spread <= 1e-5 and worst <= 1e-5, f"max route spread={spread:.2e} max |v-(n+1)!|={worst:.2e}"


EXPANSION_CORPUS = [
    (ARCSIN, 0.5, "fwd"),
    ("x^0.5 + x^1.5", 0.5, "fwd"),
    ("sqrt(x)*exp(x)", 0.5, "fwd"),
    ("x^0.3*cos(x)", 0.3, "fwd"),
    ("x^0.25 + sin(x^1.25)", 0.25, "fwd"),
    ("sqrt(abs(x)) + x*sqrt(abs(x))", 0.5, "bwd"),
]


def c10_oracle_equivalence():
    from holderkit.diffops import Direction

    worst, ok = 0.0, True
    for src, alpha, d in EXPANSION_CORPUS:
        dir = Direction.parse(d)
        s = frac_taylor_coeffs(F(src), 0.0, alpha, 2, dir)
        brute = residual_quotient_coeffs(F(src), 0.0, alpha, 2, dir)
        ok &= all(b.converged for b in brute)
        worst = max(worst, max(abs(c - float(b.value)) for c, b in zip(s.coeffs, brute)))
    return ok and worst <= 1e-5, f"{len(EXPANSION_CORPUS)} functions, k<=2, max diff={worst:.2e}"


def c11_lhopital():
    pairs = [("2*sqrt(x)", "sqrt(x)"), ("sin(sqrt(x))", "sqrt(x)"), ("x", "sqrt(x)")]
    worst = 0.0
    for f, g in pairs:
        r = frac_lhopital(F(f), F(g), 0.0, 0.5)
        worst = max(worst, abs(r.value - r.direct))
    return worst <= 1e-5, f"3 pairs, max |velocity ratio - direct ratio|={worst:.2e}"


def _random_expression(rng: random.Random, depth: int) -> str:
    atoms = ["x", "pi", "e", str(rng.randint(0, 99)), f"{rng.randint(0, 9)}.{rng.randint(0, 999)}",
             f"{rng.randint(1, 9)}e{rng.randint(-4, 4)}"]
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(atoms)
    a, b = _random_expression(rng, depth - 1), _random_expression(rng, depth - 1)
    kind = rng.randrange(6)
    if kind == 0:
        return f"{a} {rng.choice('+-*/')} {b}"
    if kind == 1:
        return f"({a})^({b})"
    if kind == 2:
        return f"-{a}"
    if kind == 3:
        return f"({a})"
    if kind == 4:
        return f"{rng.choice(sorted(FUNCTIONS))}({a})"
    return f"{rng.choice(atoms)}^{rng.choice(atoms)}"


def c12_parser_and_diff():
    rng = random.Random(12)
    trips = 0
    for _ in range(500):
        tree = parse(_random_expression(rng, 5))
        trips += parse(to_text(tree)) == tree
    nprng = np.random.default_rng(12)
    fd_worst = exact_worst = 0.0
    h = 1e-6
    for _ in range(200):
        coeffs = [float(c) for c in nprng.uniform(-5, 5, nprng.integers(1, 8))]
        src = " + ".join(f"({c!r})*x^{k}" for k, c in enumerate(coeffs))
        d = differentiate(parse(src))
        poly = np.polynomial.Polynomial(coeffs)
        for x in map(float, nprng.uniform(-2, 2, 5)):
            value = evaluate(d, x)
            fd = (poly(x + h) - poly(x - h)) / (2 * h)
            fd_worst = max(fd_worst, abs(value - fd) / max(1.0, abs(value)))
            exact_worst = max(exact_worst, abs(value - poly.deriv()(x)) / max(1.0, abs(value)))
    ok = trips == 500 and fd_worst <= 1e-6 and exact_worst <= 1e-12
    return ok, f"round trips {trips}/500, derivative rel. error vs FD={fd_worst:.2e} vs exact={exact_worst:.2e}"


CRITERIA = {
    1: ("arcsin velocity", c01_arcsin_velocity),
    2: ("arcsin coefficients", c02_arcsin_coefficients),
    3: ("error curve slope", c03_error_curve),
    4: ("cos(x^(1/3)) series", c04_cos_cube_root),
    5: ("regularization pair", c05_regularization_pair),
    6: ("Ito quadratic", c06_ito_quadratic),
    7: ("sub-critical vanishing", c07_subcritical_vanishing),
    8: ("kernel regularization", c08_kernel_regularization),
    9: ("route agreement", c09_route_agreement),
    10: ("oracle equivalence", c10_oracle_equivalence),
    11: ("l'Hopital", c11_lhopital),
    12: ("parser/diff suite", c12_parser_and_diff),
}


def run_criterion(num: int) -> tuple[bool, str]:
    name, fn = CRITERIA[num]
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed criterion, reported like any other
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return ok, f"{'PASS' if ok else 'FAIL'} criterion {num:2d} ({name}): {detail}"


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_acceptance(num, record_property):
    ok, line = run_criterion(num)
    record_property("acceptance", line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
