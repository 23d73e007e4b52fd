"""Fractional velocities, fractional Taylor expansions and regularized derivatives
of Holder-continuous functions, computed numerically from sampled limits."""

from holderkit.diffops import (
    Direction,
    VariationSample,
    delta,
    delta2,
    frac_variation,
    mixed_variation,
    normalization,
    taylor_poly,
)
from holderkit.errors import (
    DegenerateData,
    DomainError,
    HolderKitError,
    InconsistentLimits,
    InsufficientSamples,
    MissingDerivative,
    NonConvergent,
    ParseError,
    PreconditionFailed,
    UnsupportedExponent,
    ZeroDenominatorVelocity,
)
from holderkit.expansion import (
    ErrorCurve,
    FracSeries,
    Ladder,
    compound_power_coeffs,
    error_curve,
    eval_series,
    frac_taylor_coeffs,
    residual_quotient_coeffs,
)
from holderkit.exprlang import RealFn, differentiate, evaluate, parse, to_text
from holderkit.ito import Compound2Fn, Covariation, chain_velocity, covariation, ito_derivative, ito_step
from holderkit.limits import DEFAULT_TOL, EpsSchedule, LimitEstimate, Status, extrapolate, loglog_fit, loglog_slope
from holderkit.regularize import (
    ExponentLadder,
    RegularizedDerivative,
    composition_variation,
    frac_lhopital,
    kernel_residual,
    multi_regularized_derivative,
    orthogonality_check,
    regularized_derivative,
)
from holderkit.velocity import FracVelocity, HolderReport, Route, fractional_velocity, holder_exponent, mixed_velocity

__version__ = "0.1.0"
