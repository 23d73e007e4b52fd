"""One-sided limits of sampled quotients and power-law slope fits.

Limits are taken along a geometric step schedule ``eps_k = eps0 * ratio**k``.
The extrapolator assumes ``value(eps) = L + c * eps**p + ...`` with unknown
``p`` and builds two acceleration tables: iterated Aitken (every column removes
the leading geometric mode of the previous one) and Wynn's epsilon algorithm
(exact for a few superposed modes, e.g. two slow powers). The entry whose
neighbours agree best across both tables is reported. Divergence and
oscillation are detected on the raw samples before any acceleration, because
accelerating a divergent geometric sequence returns its anti-limit.

Values may be floats or ``mpmath.mpf``; with mpf input the caller's mpmath
working precision sets the noise floor.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
import numpy as np

from holderkit.errors import DegenerateData, InsufficientSamples

__all__ = [
    "DEFAULT_TOL",
    "EpsSchedule",
    "LimitEstimate",
    "LoglogFit",
    "Status",
    "extrapolate",
    "loglog_fit",
    "loglog_slope",
]

DEFAULT_TOL = 1e-7
MIN_SAMPLES = 4

# Relative growth (in units of the roundoff) below which a drifting tail is
# treated as noise rather than divergence. Independent of ``tol`` on purpose.
_SIGNIFICANT_ULPS = 1e5


class Status(str, enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    OSCILLATING = "oscillating"
    INCONCLUSIVE = "inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EpsSchedule:
    """Geometric step sequence ``eps0 * ratio**k`` for ``k < count``."""

    eps0: float = 2.0**-3
    ratio: float = 0.5
    count: int = 16

    def __post_init__(self):
        if not (self.eps0 > 0 and math.isfinite(self.eps0)):
            raise ValueError(f"eps0 must be positive, got {self.eps0}")
        if not 0 < self.ratio < 1:
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.count < MIN_SAMPLES:
            raise ValueError(f"count must be at least {MIN_SAMPLES}, got {self.count}")

    def steps(self) -> list[float]:
        return [self.eps0 * self.ratio**k for k in range(self.count)]

    def steps_mp(self) -> list:
        """The same steps as mpf values at the current working precision."""
        e0, r = mpmath.mpf(self.eps0), mpmath.mpf(self.ratio)
        return [e0 * r**k for k in range(self.count)]

    @property
    def smallest(self) -> float:
        return self.eps0 * self.ratio ** (self.count - 1)


@dataclass(frozen=True)
class LimitEstimate:
    """Extrapolated ``eps -> 0+`` limit with diagnostics.

    Attributes:
        value: The limit estimate (float, or mpf for high-precision input).
        residual_gamma: Agreement of neighbouring extrapolants, relative to
            ``max(1, |value|)``. Zero for exactly constant tails.
        status: Convergence verdict.
        samples_used: Number of finite samples that entered the table.
        order: Estimated exponent ``p`` of the leading correction, if measurable.
    """

    value: float
    residual_gamma: float
    status: Status
    samples_used: int
    order: float | None = None

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def _unpack(samples) -> tuple[list, list]:
    eps, vals = [], []
    for s in samples:
        e, v = s
        eps.append(e)
        vals.append(v)
    return eps, vals


def _is_finite(v) -> bool:
    if isinstance(v, mpmath.mpf):
        return bool(mpmath.isfinite(v))
    return math.isfinite(v)


def _unit_roundoff(vals) -> float:
    if any(isinstance(v, mpmath.mpf) for v in vals):
        return float(mpmath.mpf(2) ** (-mpmath.mp.prec))
    return 2.0**-52


def _aitken_table(vals: list, floor) -> list[list]:
    """Columns of the iterated Delta-squared process, aligned at the fine end."""
    cols = [list(vals)]
    while len(cols[-1]) >= 3:
        c = cols[-1]
        new = []
        for i in range(len(c) - 2):
            d1 = c[i + 1] - c[i]
            d2 = c[i + 2] - c[i + 1]
            den = d2 - d1
            if abs(den) <= floor:
                new.append(c[i + 2])
            else:
                new.append(c[i + 2] - d2 * d2 / den)
        cols.append(new)
    return cols


def _wynn_table(vals: list, floor) -> list[list]:
    """Even columns of Wynn's epsilon algorithm (Shanks transforms), aligned at the fine end.

    Exact for finite sums of geometric modes, which is what several
    power-law corrections ``c_i eps**p_i`` look like on a geometric schedule.
    """
    prev = [0 * vals[0]] * (len(vals) + 1)
    cur = list(vals)
    evens = []
    odd = False
    while len(cur) >= 2:
        new = []
        for i in range(len(cur) - 1):
            d = cur[i + 1] - cur[i]
            if abs(d) <= floor:
                return evens
            new.append(prev[i + 1] + 1 / d)
        prev, cur = cur, new
        odd = not odd
        if not odd:
            evens.append(cur)
    return evens


def _best_entry(cols: list[list]):
    best = None
    for col in cols:
        for i in range(1, len(col)):
            err = abs(col[i] - col[i - 1])
            if i >= 2:
                err = max(err, abs(col[i - 1] - col[i - 2]))
            elif len(col) > 2:
                continue
            if best is None or err < best[0]:
                best = (err, col[i])
    return best


def _order_estimate(eps: list, vals: list) -> float | None:
    d = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    if len(d) < 2 or d[-1] == 0 or d[-2] == 0:
        return None
    q = float(d[-1] / d[-2])
    r = float(eps[-1] / eps[-2])
    if q <= 0:
        return None
    return math.log(q) / math.log(r)


def extrapolate(samples: Iterable, tol: float = DEFAULT_TOL, noise: float = 0.0) -> LimitEstimate:
    """Estimate ``lim eps->0+ value(eps)`` from samples on a geometric schedule.

    Args:
        samples: ``(eps, value)`` pairs (e.g. ``VariationSample``) ordered by
            strictly decreasing ``eps``. Non-finite values are allowed; only
            the finite run after the last non-finite sample is used.
        tol: Convergence threshold on ``residual_gamma``.
        noise: Known absolute noise level of the values (e.g. from
            cancellation); differences below it are treated as exact zeros.

    Raises:
        InsufficientSamples: Fewer than four samples were given.
    """
    eps, vals = _unpack(samples)
    if len(vals) < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples, got {len(vals)}")
    if any(not (eps[i + 1] < eps[i]) for i in range(len(eps) - 1)) or eps[-1] <= 0:
        raise ValueError("eps must be positive and strictly decreasing")

    bad = [i for i, v in enumerate(vals) if not _is_finite(v)]
    if bad:
        if bad[-1] == len(vals) - 1:
            return LimitEstimate(vals[-1], math.inf, Status.DIVERGED, 0)
        eps, vals = eps[bad[-1] + 1:], vals[bad[-1] + 1:]
        if len(vals) < MIN_SAMPLES:
            return LimitEstimate(vals[-1], math.inf, Status.INCONCLUSIVE, len(vals))

    n = len(vals)
    unit = _unit_roundoff(vals)
    scale = max(max(abs(v) for v in vals), 1e-300)
    floor = max(32 * unit * scale, noise)
    significant = max(_SIGNIFICANT_ULPS * unit * scale, 32 * noise)
    d = [vals[i + 1] - vals[i] for i in range(n - 1)]

    if all(abs(x) <= floor for x in d[-3:]):
        return LimitEstimate(vals[-1], 0.0, Status.CONVERGED, n, None)

    order = _order_estimate(eps, vals)

    mags = [abs(v) for v in vals[-4:]]
    growing = all(mags[i + 1] > mags[i] for i in range(3))
    not_shrinking = all(abs(d[-i]) >= abs(d[-i - 1]) for i in (1, 2))
    same_sign = d[-1] * d[-2] > 0 and d[-2] * d[-3] > 0
    if growing and not_shrinking and same_sign and abs(vals[-1] - vals[-4]) > significant:
        return LimitEstimate(vals[-1], math.inf, Status.DIVERGED, n, order)

    alternating = all(d[-i] * d[-i - 1] < 0 for i in (1, 2, 3))
    if alternating and abs(d[-1]) >= abs(d[-3]) and abs(d[-1]) > significant:
        return LimitEstimate(vals[-1], math.inf, Status.OSCILLATING, n, order)

    err, value = _best_entry(_aitken_table(vals, floor) + _wynn_table(vals, floor))
    residual = float(err) / max(1.0, float(abs(value)))
    status = Status.CONVERGED if residual <= tol else Status.INCONCLUSIVE
    return LimitEstimate(value, residual, status, n, order)


@dataclass(frozen=True)
class LoglogFit:
    """Least-squares line ``ln|value| = slope * ln(eps) + intercept``."""

    slope: float
    intercept: float
    rms_residual: float

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)


def loglog_fit(samples: Sequence) -> LoglogFit:
    """Fit a power law ``|value| ~ C eps**slope`` to ``(eps, |value|)`` pairs.

    Raises:
        InsufficientSamples: Fewer than four samples.
        DegenerateData: A magnitude is zero or non-finite.
    """
    eps, vals = _unpack(samples)
    if len(vals) < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples, got {len(vals)}")
    e = np.asarray([float(x) for x in eps])
    v = np.asarray([float(x) for x in vals])
    if not (np.all(np.isfinite(v)) and np.all(v > 0)):
        raise DegenerateData("log-log fit needs strictly positive finite magnitudes")
    if not np.all(e > 0):
        raise DegenerateData("log-log fit needs positive eps")
    lx, ly = np.log(e), np.log(v)
    slope, intercept = np.polyfit(lx, ly, 1)
    rms = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return LoglogFit(float(slope), float(intercept), rms)


def loglog_slope(samples: Sequence) -> float:
    """Slope of ``ln|value|`` against ``ln(eps)``; see :func:`loglog_fit`."""
    return loglog_fit(samples).slope
