"""Exception hierarchy shared by every holderkit module."""

from __future__ import annotations


class HolderKitError(Exception):
    """Base class for all library errors."""


class ParseError(HolderKitError):
    """Raised when expression source text does not match the grammar.

    Attributes:
        offset: Byte offset (UTF-8) of the offending token in the source.
        expected: Token kinds that would have been accepted at ``offset``.
    """

    def __init__(self, message: str, offset: int, expected: frozenset[str] | set[str] = frozenset()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f"{message} at byte {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(detail)


class DomainError(HolderKitError, ArithmeticError):
    """An expression was evaluated outside its real domain, or produced a non-finite value."""


class UnsupportedExponent(HolderKitError, ValueError):
    """A fractional order lies outside the admissible range."""


class MissingDerivative(HolderKitError):
    """A symbolic derivative is needed but the function has none."""


class InsufficientSamples(HolderKitError, ValueError):
    """Too few samples were supplied to extrapolate a limit."""


class DegenerateData(HolderKitError, ValueError):
    """Log-log regression was asked to fit zero or non-finite magnitudes."""


class NonConvergent(HolderKitError):
    """A limit did not converge; ``estimate`` carries the diagnostics.

    Attributes:
        estimate: The :class:`~holderkit.limits.LimitEstimate` that failed.
        what: Short name of the quantity whose limit failed.
    """

    def __init__(self, estimate, what: str = "limit"):
        self.estimate = estimate
        self.what = what
        super().__init__(
            f"{what} did not converge: status={estimate.status}, "
            f"value={float(estimate.value):.6g}, residual={float(estimate.residual_gamma):.3g}"
        )


class PreconditionFailed(HolderKitError, ValueError):
    """An operation's mathematical precondition does not hold at the given point."""


class ZeroDenominatorVelocity(HolderKitError, ZeroDivisionError):
    """The denominator function of a fractional l'Hopital ratio has zero velocity."""


class InconsistentLimits(HolderKitError):
    """Two independent routes to the same limit disagree beyond tolerance."""

    def __init__(self, what: str, first: float, second: float, tol: float):
        self.what = what
        self.first = first
        self.second = second
        self.tol = tol
        super().__init__(f"{what}: {first:.12g} vs {second:.12g} differ by more than {tol:.3g}")
