"""Exception hierarchy for the gwminimax package.

Every failure mode that callers are expected to distinguish gets its own
class.  The CLI maps these onto process exit codes, so the taxonomy here is
part of the public contract: analysis code should raise the most specific
subclass that applies and should never collapse distinct failure modes into
a bare ``ValueError``.
"""

from __future__ import annotations

__all__ = [
    "GWMinimaxError",
    "DistributionFormatError",
    "DomainError",
    "IdentityMapError",
    "InfiniteDerivativeError",
    "UnresolvedTouchpointError",
    "NoConvergenceError",
    "PrecisionLossError",
    "DerivativeOrderNotFoundError",
    "AssumptionViolatedError",
    "NotAFixedPointError",
    "BudgetExceededError",
    "InsufficientConditionedSamplesError",
]


class GWMinimaxError(Exception):
    """Base class for all errors raised by this package."""


class DistributionFormatError(GWMinimaxError, ValueError):
    """An offspring-distribution specification is malformed or invalid.

    Raised for negative masses, masses that do not sum to one, support
    containing 0, unknown kinds, and unparseable spec strings.
    """


class DomainError(GWMinimaxError, ValueError):
    """An argument left the unit interval (beyond rounding slack)."""


class IdentityMapError(GWMinimaxError):
    """The two-level map is the identity, so a fixed-point enumeration is
    meaningless: every point of [0, 1] is fixed.

    This is a signal rather than a defect; callers wanting the limit law
    should treat it as "uniform limit at every depth".
    """


class InfiniteDerivativeError(GWMinimaxError, ArithmeticError):
    """A derivative series diverges (infinite-mean offspring at an endpoint)."""


class UnresolvedTouchpointError(GWMinimaxError):
    """A near-tangency of the two-level map could not be classified.

    The refined minimum of |f(x) - x| landed between the fixed-point
    tolerance and the touchpoint threshold, so the data is consistent both
    with a genuine double root and with a narrow near-miss.  Rather than
    guess, the scan refuses.
    """

    def __init__(self, location: float, residual: float, message: str | None = None):
        self.location = location
        self.residual = residual
        super().__init__(
            message
            or f"ambiguous tangency near x={location!r}: min |f(x)-x| = {residual:.3e} "
            "sits between the acceptance tolerance and the rejection threshold"
        )


class NoConvergenceError(GWMinimaxError, ArithmeticError):
    """An iteration hit its cap before meeting its Cauchy criterion."""


class PrecisionLossError(GWMinimaxError, ArithmeticError):
    """A computation underflowed the working precision before converging."""


class DerivativeOrderNotFoundError(GWMinimaxError, ArithmeticError):
    """No non-vanishing derivative of order > 1 was found up to the cap."""


class AssumptionViolatedError(GWMinimaxError):
    """Input data falls outside the hypotheses of the requested analysis."""


class NotAFixedPointError(GWMinimaxError, ValueError):
    """A point claimed to be fixed fails |f(x) - x| <= tolerance."""


class BudgetExceededError(GWMinimaxError):
    """A sampled tree exceeded the configured node budget."""

    def __init__(self, budget: int, message: str | None = None):
        self.budget = budget
        super().__init__(message or f"tree exceeded the node budget of {budget}")


class InsufficientConditionedSamplesError(GWMinimaxError):
    """Too few Monte Carlo samples survived conditioning to report on."""
