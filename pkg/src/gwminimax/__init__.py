"""Minimax game values on Galton-Watson trees.

Numerical toolkit for the distributional recursion satisfied by the value
of an alternating min/max game played on a random tree: fixed points of the
two-level CDF map, classification of the limit law, rescaled fluctuation
regimes, endogeny of the recursive tree process, and Monte Carlo
validation of all of the above.
"""

from .distributions import (
    FiniteSupport,
    Geometric,
    InvolutionB,
    InvolutionC,
    OffspringDistribution,
    PowerLaw,
    Regular,
    distribution_from_dict,
    parse_distribution,
)
from .errors import (
    AssumptionViolatedError,
    BudgetExceededError,
    DerivativeOrderNotFoundError,
    DistributionFormatError,
    DomainError,
    GWMinimaxError,
    IdentityMapError,
    InfiniteDerivativeError,
    InsufficientConditionedSamplesError,
    NoConvergenceError,
    NotAFixedPointError,
    PrecisionLossError,
    UnresolvedTouchpointError,
)
from .jets import Jet

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "OffspringDistribution",
    "FiniteSupport",
    "Regular",
    "Geometric",
    "InvolutionB",
    "InvolutionC",
    "PowerLaw",
    "parse_distribution",
    "distribution_from_dict",
    "Jet",
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
