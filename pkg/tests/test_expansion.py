from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from holderkit.diffops import Direction
from holderkit.errors import MissingDerivative, NonConvergent
from holderkit.expansion import (
    FracSeries,
    Ladder,
    compound_power_coeffs,
    error_curve,
    eval_series,
    frac_taylor_coeffs,
    residual_quotient_coeffs,
)
from holderkit.exprlang import RealFn
from holderkit.limits import DEFAULT_TOL, EpsSchedule, extrapolate, loglog_slope
from holderkit.velocity import fractional_velocity

F = RealFn.from_expr
FWD, BWD = Direction.FORWARD, Direction.BACKWARD

ARCSIN_COEFFS = [
    -math.sqrt(2),
    -1 / (3 * 2**1.5),
    -3 / (5 * 2**4.5),
    -5 / (7 * 2**6.5),
    -35 / (9 * 2**10.5),
]


@pytest.fixture(scope="module")
def arcsin_series():
    return frac_taylor_coeffs(F("asin(1-x)"), 0.0, 0.5, 4)


def test_arcsin_coefficients(arcsin_series):
    assert arcsin_series.ladder is Ladder.ALPHA_PLUS_K
    assert arcsin_series.f_at_base == pytest.approx(math.pi / 2)
    for c, expected in zip(arcsin_series.coeffs, ARCSIN_COEFFS):
        assert c == pytest.approx(expected, abs=1e-12)
    assert all(e.converged for e in arcsin_series.estimates)


@pytest.mark.parametrize(
    "source, n, expected",
    [
        ("x^0.5", 3, [1.0, 0.0, 0.0, 0.0]),
        ("x^0.5 + x^1.5", 2, [1.0, 1.0, 0.0]),
        ("3*x^0.5 - 2*x^2.5", 2, [3.0, 0.0, -2.0]),
    ],
)
def test_exact_fractional_powers(source, n, expected):
    s = frac_taylor_coeffs(F(source), 0.0, 0.5, n)
    assert list(s.coeffs) == pytest.approx(expected, abs=1e-12)


def test_backward_coefficients_expand_left_values():
    f = F("sqrt(abs(x)) + x*sqrt(abs(x))")
    s = frac_taylor_coeffs(f, 0.0, 0.5, 3, BWD)
    assert list(s.coeffs) == pytest.approx([1.0, -1.0, 0.0, 0.0], abs=1e-12)
    for eps in (0.2, 0.01):
        assert eval_series(s, eps) == pytest.approx(f(-eps), rel=1e-13)


def test_off_ladder_term_does_not_converge():
    with pytest.raises(NonConvergent) as info:
        frac_taylor_coeffs(F("x + sqrt(x)"), 0.0, 0.5, 2)
    assert "c_1" in str(info.value)
    s = frac_taylor_coeffs(F("x + sqrt(x)"), 0.0, 0.5, 2, strict=False)
    assert s.statuses()[0] == "converged" and s.statuses()[1] != "converged"


def test_native_function_needs_expression():
    with pytest.raises(MissingDerivative):
        frac_taylor_coeffs(RealFn.from_callable(math.sqrt), 0.0, 0.5, 1)


def test_alpha_range():
    with pytest.raises(ValueError):
        frac_taylor_coeffs(F("sqrt(x)"), 0.0, 1.0, 1)


def test_compound_cos_cube_root():
    s = compound_power_coeffs(F("cos(x)"), 1 / 3, 8)
    assert s.ladder is Ladder.ALPHA_TIMES_K
    expected = [1, 0, -1 / 2, 0, 1 / 24, 0, -1 / 720, 0, 1 / 40320]
    assert list(s.coeffs) == pytest.approx(expected, abs=1e-15)
    f = F("cos(x^(1/3))")
    curve = error_curve(f, s, np.linspace(1e-6, 0.5, 100))
    assert max(e for _, e in curve) < 1e-6


def test_compound_identity_and_exp():
    s = compound_power_coeffs(F("x"), 0.7, 3)
    assert list(s.coeffs) == [0.0, 1.0, 0.0, 0.0]
    assert eval_series(s, 0.3) == pytest.approx(0.3**0.7, rel=1e-15)
    s = compound_power_coeffs(F("exp(x)"), 0.5, 5)
    assert list(s.coeffs) == pytest.approx([1 / math.factorial(k) for k in range(6)], rel=1e-15)


def test_compound_backward_flips_odd_terms():
    s = compound_power_coeffs(F("exp(x)"), 0.5, 3, BWD)
    assert list(s.coeffs) == pytest.approx([1, -1, 0.5, -1 / 6], rel=1e-15)


def test_eval_series_examples(arcsin_series):
    s1 = FracSeries(0.0, math.pi / 2, 0.5, arcsin_series.coeffs[:2])
    expected = math.pi / 2 - math.sqrt(2) * 0.1 - 0.001 / (3 * 2**1.5)
    assert eval_series(s1, 0.01) == pytest.approx(expected, abs=1e-15)
    assert eval_series(arcsin_series, 0.0) == arcsin_series.f_at_base
    single = FracSeries(0.0, 2.0, 0.3, (-1.5,))
    assert eval_series(single, 0.2) == pytest.approx(2.0 - 1.5 * 0.2**0.3)
    with pytest.raises(ValueError):
        eval_series(single, -1.0)


def test_eval_series_precise(arcsin_series):
    with mpmath.workdps(40):
        v = eval_series(arcsin_series, 1e-3, precise=True)
        exact = mpmath.asin(1 - mpmath.mpf("1e-3"))
        assert abs(v - exact) < 1e-16


def test_error_curve_order(arcsin_series):
    grid = np.logspace(-4, -1, 32)
    curve = error_curve(F("asin(1-x)"), arcsin_series, grid)
    assert len(curve) == 32 and not curve.skipped
    assert loglog_slope(curve.points) == pytest.approx(5.5, abs=0.2)
    errs = [e for _, e in curve]
    assert all(a < b for a, b in zip(errs, errs[1:]))


def test_error_curve_exact_power_and_skips():
    s = frac_taylor_coeffs(F("x^0.5"), 0.0, 0.5, 2)
    curve = error_curve(F("x^0.5"), s, [1e-3, 0.1, 0.9])
    assert max(e for _, e in curve) <= 1e-12
    s = frac_taylor_coeffs(F("asin(1-x)"), 0.0, 0.5, 1)
    curve = error_curve(F("asin(1-x)"), s, [0.5, 3.0])
    assert curve.skipped == (3.0,) and len(curve) == 1


@pytest.mark.parametrize(
    "source, x, alpha",
    [("asin(1-x)", 0.0, 0.5), ("x^0.5 + x^1.5", 0.0, 0.5), ("sqrt(x)*exp(x)", 0.0, 0.5), ("x^0.3*cos(x)", 0.0, 0.3)],
)
def test_c0_equals_velocity_and_residual_vanishes(source, x, alpha):
    f = F(source)
    s = frac_taylor_coeffs(f, x, alpha, 2)
    vel = fractional_velocity(f, x, alpha)
    assert abs(s.coeffs[0] - vel.value) <= 10 * DEFAULT_TOL
    steps = EpsSchedule().steps()
    q = [(e, (f(x + e) - f(x) - s.coeffs[0] * e**alpha) / e**alpha) for e in steps]
    est = extrapolate(q)
    assert est.converged and abs(est.value) <= DEFAULT_TOL


@pytest.mark.parametrize(
    "source, alpha, dir",
    [
        ("asin(1-x)", 0.5, FWD),
        ("sqrt(x)*exp(x)", 0.5, FWD),
        ("x^0.3*cos(x)", 0.3, FWD),
        ("sqrt(abs(x)) + x*sqrt(abs(x))", 0.5, BWD),
    ],
)
def test_limit_formula_matches_residual_quotient(source, alpha, dir):
    f = F(source)
    s = frac_taylor_coeffs(f, 0.0, alpha, 2, dir)
    brute = residual_quotient_coeffs(f, 0.0, alpha, 2, dir)
    for c, b in zip(s.coeffs, brute):
        assert b.converged
        assert abs(c - float(b.value)) <= 1e-5
