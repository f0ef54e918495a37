"""Offspring distributions on {1, 2, ...} and their generating-function maps.

Each distribution owns three closely related maps on the unit interval:

* ``pgf``               -- the probability generating function of the
                           offspring count,
* ``level_map``         -- the complement of the pgf; it advances the CDF of
                           the game value across one tree level (a single
                           max over children),
* ``two_level_map``     -- the level map applied twice; it advances the CDF
                           across a min level followed by a max level, and
                           its fixed points organize everything else in the
                           package.

Numerical care: the maps are needed accurately in *relative* terms near both
corners of [0, 1] (tail exponents at 0, atoms hugging 1), so each kind
implements two primitives, ``_g_arr(x) = pgf(x)`` accurate for small x and
``_r1m_arr(u) = level_map(1 - u)`` accurate for small u.  The composite
``two_level_map(x) = _r1m_arr(_g_arr(x))`` then never subtracts
nearly-equal quantities; for the involution families the algebra collapses
inside the composition and the identity map is recovered to a few ulps.

The mass table of every node having at least one child (no mass at k = 0)
is a standing assumption; specifications violating it are rejected.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import math

import numpy as np

from .errors import (
    DistributionFormatError,
    DomainError,
    InfiniteDerivativeError,
)
from .jets import Jet

__all__ = [
    "OffspringDistribution",
    "FiniteSupport",
    "Regular",
    "Geometric",
    "InvolutionB",
    "InvolutionC",
    "PowerLaw",
    "parse_distribution",
    "distribution_from_dict",
]

_DOMAIN_SLACK = 1e-12
_MASS_TOL = 1e-12
_DEFAULT_TABLE_CAP = 10**6


def _clip_unit(x, name: str = "x"):
    """Validate x (scalar or array) against [0,1] with rounding slack.

    Returns a float scalar or float64 array clipped into [0, 1].
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (np.any(arr < -_DOMAIN_SLACK) or np.any(arr > 1.0 + _DOMAIN_SLACK)):
        bad = arr[(arr < -_DOMAIN_SLACK) | (arr > 1.0 + _DOMAIN_SLACK)]
        raise DomainError(f"{name} outside [0,1]: {bad.flat[0]!r}")
    out = np.clip(arr, 0.0, 1.0)
    if np.isscalar(x) or getattr(x, "ndim", None) == 0:
        return float(out)
    return out


class _TableSampler:
    """Inverse-CDF offspring sampler over an explicit mass table.

    Consumes exactly one uniform per draw, which keeps the per-sample
    random stream layout independent of the law.
    """

    def __init__(self, ks: np.ndarray, probs: np.ndarray, truncated_at: int | None,
                 tail_mass: float):
        self.ks = np.asarray(ks, dtype=np.int64)
        cum = np.cumsum(np.asarray(probs, dtype=float))
        cum[-1] = 1.0
        self.cum = cum
        self.truncated_at = truncated_at
        self.tail_mass = float(tail_mass)

    def draw(self, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.cum, u, side="right")
        idx = np.minimum(idx, len(self.ks) - 1)
        return self.ks[idx]


class _GeometricSampler:
    """Closed-form inverse-CDF sampler for the geometric law on {1,2,...}."""

    truncated_at = None
    tail_mass = 0.0

    def __init__(self, p: float):
        self.p = p
        self._log_q = math.log1p(-p) if p < 1.0 else None

    def draw(self, u: np.ndarray) -> np.ndarray:
        if self._log_q is None:
            return np.ones(np.shape(u), dtype=np.int64)
        k = np.ceil(np.log1p(-u) / self._log_q)
        return np.maximum(k, 1.0).astype(np.int64)


@dataclasses.dataclass(frozen=True)
class OffspringDistribution:
    """Abstract base for offspring laws; see module docstring for the maps."""

    # -- kind-specific primitives ----------------------------------------

    def _g_arr(self, x: np.ndarray) -> np.ndarray:
        """pgf on a clipped float64 array."""
        raise NotImplementedError

    def _r1m_arr(self, u: np.ndarray) -> np.ndarray:
        """level_map(1 - u) on a clipped float64 array, accurate for small u."""
        raise NotImplementedError

    def pgf_jet(self, x0: float, order: int) -> Jet:
        """Taylor jet of the pgf about x0 (exact derivatives up to order)."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def min_support(self) -> int:
        raise NotImplementedError

    def mass(self, k: int) -> float:
        raise NotImplementedError

    def offspring_sampler(self, cap: int | None = None):
        raise NotImplementedError

    def spec_dict(self) -> dict:
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError

    def _pgf_mp(self, x):
        """pgf of a gmpy2 mpfr scalar, used by extended-precision iteration."""
        raise NotImplementedError(
            f"{type(self).__name__} has no extended-precision evaluation"
        )

    # -- public maps ------------------------------------------------------

    def pgf(self, x):
        """G(x) = sum_k p_k x^k."""
        xs = _clip_unit(x)
        return self._g_arr(np.asarray(xs)) if isinstance(xs, np.ndarray) else float(
            self._g_arr(np.asarray([xs]))[0]
        )

    def level_map(self, x):
        """One level of the value recursion on CDFs: 1 - G(x).

        Decreasing bijection of [0,1]; computed in complement form so the
        result keeps relative accuracy when it is tiny (x near 1).
        """
        xs = _clip_unit(x)
        if isinstance(xs, np.ndarray):
            return self._r1m_arr(1.0 - xs)
        return float(self._r1m_arr(np.asarray([1.0 - xs]))[0])

    def two_level_map(self, x):
        """Two levels of the value recursion: R(R(x)) for R = 1 - G.

        Composed as level_map(1 - G(x)) so that the inner complement is
        never formed by subtraction; this keeps the identity families exact
        to a few ulps across the whole interval.
        """
        xs = _clip_unit(x)
        scalar = not isinstance(xs, np.ndarray)
        arr = np.asarray([xs]) if scalar else xs
        out = self._r1m_arr(self._g_arr(arr))
        return float(out[0]) if scalar else out

    def two_level_complement(self, x):
        """1 - two_level_map(x), accurate when the map value hugs 1."""
        xs = _clip_unit(x)
        scalar = not isinstance(xs, np.ndarray)
        arr = np.asarray([xs]) if scalar else xs
        out = self._g_arr(self._r1m_arr(1.0 - arr))
        return float(out[0]) if scalar else out

    def pgf_inverse(self, y):
        """The x in [0,1] with G(x) = y; generic bisection fallback.

        Bisection runs to floating-point exhaustion in x, which meets
        |G(x) - y| <= 1e-12 wherever G' is moderate; kinds with closed-form
        inverses override this.
        """
        ys = _clip_unit(y, "y")
        scalar = not isinstance(ys, np.ndarray)
        arr = np.asarray([ys]) if scalar else ys
        lo = np.zeros_like(arr)
        hi = np.ones_like(arr)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self._g_arr(mid) < arr
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        out[arr == 0.0] = 0.0
        out[arr == 1.0] = 1.0
        return float(out[0]) if scalar else out

    def two_level_jet(self, x0: float, order: int) -> Jet:
        """Taylor jet of the two-level map about x0.

        Built by composing the jet of R about R(x0) with the jet of R about
        x0.  At the endpoints this requires every factorial moment up to
        ``order`` to exist, so infinite-mean laws raise
        InfiniteDerivativeError there (the derivative series genuinely
        diverges; identity families are recognized before anything asks for
        endpoint jets).
        """
        x0 = _clip_unit(float(x0))
        if x0 in (0.0, 1.0) and not math.isfinite(self.mean()):
            raise InfiniteDerivativeError(
                f"endpoint derivative series of {self.spec_string()} diverges "
                "(infinite offspring mean)"
            )
        inner_g = self.pgf_jet(x0, order)
        r0 = self.level_map(x0)
        inner = Jet((r0,) + tuple(-c for c in inner_g.coeffs[1:]))
        outer_g = self.pgf_jet(r0, order)
        outer = Jet((self.level_map(r0),) + tuple(-c for c in outer_g.coeffs[1:]))
        return outer.compose(inner)

    def mp_two_level_map(self, x):
        """two_level_map of a gmpy2 mpfr scalar (naive form; the caller's
        working precision absorbs the corner cancellation)."""
        return 1 - self._pgf_mp(1 - self._pgf_mp(x))

    # -- conveniences ------------------------------------------------------

    @property
    def p1(self) -> float:
        """Mass at one child; f'(0) = f'(1) = p1 * mean for finite means."""
        return self.mass(1)

    def has_finite_mean(self) -> bool:
        return math.isfinite(self.mean())

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.spec_string()


# ---------------------------------------------------------------------------
# finite support


@dataclasses.dataclass(frozen=True)
class FiniteSupport(OffspringDistribution):
    """Explicit mass table on a finite subset of {1, 2, ...}."""

    table: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.table:
            raise DistributionFormatError("empty mass table")
        seen = set()
        total = 0.0
        for k, p in self.table:
            if not (isinstance(k, int) and k >= 1):
                raise DistributionFormatError(
                    f"support must lie in {{1,2,...}}, got {k!r}"
                )
            if k in seen:
                raise DistributionFormatError(f"duplicate support point {k}")
            seen.add(k)
            if not (0.0 <= p <= 1.0):
                raise DistributionFormatError(f"mass p_{k}={p!r} outside [0,1]")
            total += p
        if abs(total - 1.0) > _MASS_TOL:
            raise DistributionFormatError(
                f"masses sum to {total!r}, expected 1 within {_MASS_TOL}"
            )
        object.__setattr__(
            self, "table", tuple(sorted((k, p) for k, p in self.table if p > 0.0))
        )

    @classmethod
    def from_masses(cls, masses: dict[int, float]) -> "FiniteSupport":
        return cls(tuple(sorted((int(k), float(p)) for k, p in masses.items())))

    @property
    def masses(self) -> dict[int, float]:
        return dict(self.table)

    def _dense_coeffs(self) -> np.ndarray:
        return _finite_dense_coeffs(self.table)

    def _g_arr(self, x: np.ndarray) -> np.ndarray:
        # Horner in x over the dense coefficient vector.
        return np.polynomial.polynomial.polyval(x, self._dense_coeffs())

    def _r1m_arr(self, u: np.ndarray) -> np.ndarray:
        ks = np.array([k for k, _ in self.table], dtype=float)
        ps = np.array([p for _, p in self.table])
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = -np.expm1(np.multiply.outer(np.log1p(-u), ks))
        # ufunc reduction, not BLAS: keeps scalar and batch calls bit-identical
        return np.where(u >= 1.0, 1.0, (terms * ps).sum(axis=-1))

    def pgf_jet(self, x0: float, order: int) -> Jet:
        coeffs = self._dense_coeffs()
        t = Jet.variable(float(x0), order)
        acc = Jet.constant(coeffs[-1], order)
        for c in coeffs[-2::-1]:
            acc = acc * t + float(c)
        return acc

    def _pgf_mp(self, x):
        acc = 0 * x
        for c in self._dense_coeffs()[::-1]:
            acc = acc * x + float(c)
        return acc

    def mean(self) -> float:
        return float(sum(k * p for k, p in self.table))

    def min_support(self) -> int:
        return self.table[0][0]

    def mass(self, k: int) -> float:
        return self.masses.get(int(k), 0.0)

    def offspring_sampler(self, cap: int | None = None) -> _TableSampler:
        ks = np.array([k for k, _ in self.table], dtype=np.int64)
        ps = np.array([p for _, p in self.table])
        return _TableSampler(ks, ps, truncated_at=None, tail_mass=0.0)

    def spec_dict(self) -> dict:
        return {"kind": "finite", "masses": {str(k): p for k, p in self.table}}

    def spec_string(self) -> str:
        return "finite:" + ",".join(f"{k}={p!r}" for k, p in self.table)


@functools.lru_cache(maxsize=64)
def _finite_dense_coeffs(table: tuple[tuple[int, float], ...]) -> np.ndarray:
    coeffs = np.zeros(max(k for k, _ in table) + 1)
    for k, p in table:
        coeffs[k] = p
    return coeffs


# ---------------------------------------------------------------------------
# regular (deterministic d-ary branching)


@dataclasses.dataclass(frozen=True)
class Regular(OffspringDistribution):
    """Every node has exactly ``degree`` children."""

    degree: int

    def __post_init__(self):
        if not (isinstance(self.degree, int) and self.degree >= 1):
            raise DistributionFormatError(
                f"degree must be an integer >= 1, got {self.degree!r}"
            )

    def _g_arr(self, x: np.ndarray) -> np.ndarray:
        return x ** self.degree

    def _r1m_arr(self, u: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            out = -np.expm1(self.degree * np.log1p(-u))
        return np.where(u >= 1.0, 1.0, out)

    def pgf_jet(self, x0: float, order: int) -> Jet:
        return Jet.variable(float(x0), order).power(self.degree)

    def _pgf_mp(self, x):
        return x ** self.degree

    def pgf_inverse(self, y):
        ys = _clip_unit(y, "y")
        return ys ** (1.0 / self.degree)

    def mean(self) -> float:
        return float(self.degree)

    def min_support(self) -> int:
        return self.degree

    def mass(self, k: int) -> float:
        return 1.0 if int(k) == self.degree else 0.0

    def offspring_sampler(self, cap: int | None = None) -> _TableSampler:
        return _TableSampler(
            np.array([self.degree]), np.array([1.0]), truncated_at=None, tail_mass=0.0
        )

    def spec_dict(self) -> dict:
        return {"kind": "regular", "degree": self.degree}

    def spec_string(self) -> str:
        return f"regular:{self.degree}"


# ---------------------------------------------------------------------------
# geometric


@dataclasses.dataclass(frozen=True)
class Geometric(OffspringDistribution):
    """p_k = p (1-p)^(k-1) on {1, 2, ...}; the classic identity family."""

    p: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise DistributionFormatError(f"geometric parameter must lie in (0,1], got {self.p!r}")

    def _g_arr(self, x: np.ndarray) -> np.ndarray:
        q = 1.0 - self.p
        return self.p * x / (1.0 - q * x)

    def _r1m_arr(self, u: np.ndarray) -> np.ndarray:
        # R(1-u) = u / (p + (1-p) u), already in lowest terms.
        return u / (self.p + (1.0 - self.p) * u)

    def pgf_jet(self, x0: float, order: int) -> Jet:
        p, q = self.p, 1.0 - self.p
        denom = 1.0 - q * x0
        coeffs = [p * x0 / denom]
        for j in range(1, order + 1):
            coeffs.append(p * q ** (j - 1) / denom ** (j + 1))
        return Jet(tuple(coeffs))

    def _pgf_mp(self, x):
        return self.p * x / (1 - (1 - self.p) * x)

    def pgf_inverse(self, y):
        ys = _clip_unit(y, "y")
        return ys / (self.p + (1.0 - self.p) * ys)

    def mean(self) -> float:
        return 1.0 / self.p

    def min_support(self) -> int:
        return 1

    def mass(self, k: int) -> float:
        k = int(k)
        return self.p * (1.0 - self.p) ** (k - 1) if k >= 1 else 0.0

    def offspring_sampler(self, cap: int | None = None) -> _GeometricSampler:
        return _GeometricSampler(self.p)

    def spec_dict(self) -> dict:
        return {"kind": "geometric", "p": self.p}

    def spec_string(self) -> str:
        return f"geometric:{self.p!r}"


# ---------------------------------------------------------------------------
# the two closed-form involution families


@dataclasses.dataclass(frozen=True)
class InvolutionB(OffspringDistribution):
    """G(x) = (1 - (1-x)^(1/n))^n; the level map is an involution.

    Support is {n, n+1, ...} with tail index 1 + 1/n, so the mean is
    infinite for n >= 2; n = 1 degenerates to the deterministic single
    child.
    """

    index: int

    def __post_init__(self):
        if not (isinstance(self.index, int) and self.index >= 1):
            raise DistributionFormatError(
                f"involution index must be an integer >= 1, got {self.index!r}"
            )

    def _g_arr(self, x: np.ndarray) -> np.ndarray:
        n = self.index
        with np.errstate(divide="ignore"):
            inner = -np.expm1(np.log1p(-x) / n)  # 1 - (1-x)^(1/n)
        inner = np.where(x >= 1.0, 1.0, inner)
        return inner ** n

    def _r1m_arr(self, u: np.ndarray) -> np.ndarray:
        n = self.index
        with np.errstate(divide="ignore"):
            root = u ** (1.0 / n)
            out = -np.expm1(n * np.log1p(-root))
        return np.where(u >= 1.0, 1.0, out)

    def pgf_jet(self, x0: float, order: int) -> Jet:
        n = self.index
        if n >= 2 and x0 >= 1.0:
            raise InfiniteDerivativeError(
                f"{self.spec_string()} has diverging derivatives at 1"
            )
        t = Jet.variable(float(x0), order)
        inner = (1.0 - t).power(1.0 / n) if n > 1 else (1.0 - t)
        return (1.0 - inner).power(n)

    def _pgf_mp(self, x):
        n = self.index
        return (1 - (1 - x) ** (1 / _mpfloat(n))) ** n

    def pgf_inverse(self, y):
        # R is an involution, so G^{-1}(y) = R(1-y).
        ys = _clip_unit(y, "y")
        scalar = not isinstance(ys, np.ndarray)
        arr = np.asarray([ys]) if scalar else ys
        out = self._r1m_arr(arr)
        return float(out[0]) if scalar else out

    def mean(self) -> float:
        return 1.0 if self.index == 1 else math.inf

    def min_support(self) -> int:
        return self.index

    def mass(self, k: int) -> float:
        k = int(k)
        if k < 1:
            return 0.0
        return float(_involution_b_masses(self.index, max(k, 8))[k - 1])

    def offspring_sampler(self, cap: int | None = None) -> _TableSampler:
        cap = cap or _DEFAULT_TABLE_CAP
        probs = _involution_b_masses(self.index, cap)
        tail = 1.0 - probs.sum()
        return _TableSampler(
            np.arange(1, cap + 1), probs / probs.sum(), truncated_at=cap,
            tail_mass=tail,
        )

    def spec_dict(self) -> dict:
        return {"kind": "involution_b", "index": self.index}

    def spec_string(self) -> str:
        return f"invb:{self.index}"


@dataclasses.dataclass(frozen=True)
class InvolutionC(OffspringDistribution):
    """G(x) = 1 - (1 - x^n)^(1/n); support {n, 2n, 3n, ...}.

    The mirror image of InvolutionB under x -> 1-x conjugation; also an
    involution family, with infinite mean for n >= 2.
    """

    index: int

    def __post_init__(self):
        if not (isinstance(self.index, int) and self.index >= 1):
            raise DistributionFormatError(
                f"involution index must be an integer >= 1, got {self.index!r}"
            )

    def _g_arr(self, x: np.ndarray) -> np.ndarray:
        n = self.index
        with np.errstate(divide="ignore"):
            out = -np.expm1(np.log1p(-(x ** n)) / n)
        return np.where(x >= 1.0, 1.0, out)

    def _r1m_arr(self, u: np.ndarray) -> np.ndarray:
        n = self.index
        with np.errstate(divide="ignore"):
            out = (-np.expm1(n * np.log1p(-u))) ** (1.0 / n)
        return np.where(u >= 1.0, 1.0, out)

    def pgf_jet(self, x0: float, order: int) -> Jet:
        n = self.index
        if n >= 2 and x0 >= 1.0:
            raise InfiniteDerivativeError(
                f"{self.spec_string()} has diverging derivatives at 1"
            )
        t = Jet.variable(float(x0), order)
        u = t.power(n)
        return 1.0 - (1.0 - u).power(1.0 / n) if n > 1 else u

    def _pgf_mp(self, x):
        n = self.index
        return 1 - (1 - x ** n) ** (1 / _mpfloat(n))

    def pgf_inverse(self, y):
        ys = _clip_unit(y, "y")
        scalar = not isinstance(ys, np.ndarray)
        arr = np.asarray([ys]) if scalar else ys
        out = self._r1m_arr(arr)
        return float(out[0]) if scalar else out

    def mean(self) -> float:
        return 1.0 if self.index == 1 else math.inf

    def min_support(self) -> int:
        return self.index

    def mass(self, k: int) -> float:
        k = int(k)
        n = self.index
        if k < 1 or k % n:
            return 0.0
        j = k // n
        w = _signed_binomial_run(1.0 / n, j)
        return float(-w[j - 1])

    def offspring_sampler(self, cap: int | None = None) -> _TableSampler:
        cap = cap or _DEFAULT_TABLE_CAP
        n = self.index
        jmax = max(cap // n, 1)
        probs = -_signed_binomial_run(1.0 / n, jmax)
        tail = 1.0 - probs.sum()
        return _TableSampler(
            np.arange(1, jmax + 1) * n, probs / probs.sum(), truncated_at=jmax * n,
            tail_mass=tail,
        )

    def spec_dict(self) -> dict:
        return {"kind": "involution_c", "index": self.index}

    def spec_string(self) -> str:
        return f"invc:{self.index}"


def _signed_binomial_run(beta: float, kmax: int) -> np.ndarray:
    """w_k = (-1)^k * binomial(beta, k) for k = 1..kmax, via a stable
    cumulative product (all factors share one sign pattern, no cancellation).
    """
    i = np.arange(1, kmax + 1, dtype=float)
    return np.cumprod((i - 1.0 - beta) / i)


@functools.lru_cache(maxsize=16)
def _involution_b_masses(n: int, kmax: int) -> np.ndarray:
    """Masses p_1..p_kmax of InvolutionB(n) by binomial expansion of
    (1 - (1-x)^(1/n))^n; doubles as the validation oracle for the jets."""
    out = np.zeros(kmax)
    for j in range(1, n + 1):
        w = _signed_binomial_run(j / n, kmax)
        out += math.comb(n, j) * (-1.0) ** j * w
    return out


def _mpfloat(v):
    import gmpy2

    return gmpy2.mpfr(v)


# ---------------------------------------------------------------------------
# asymptotic power law


@dataclasses.dataclass(frozen=True)
class PowerLaw(OffspringDistribution):
    """p_k proportional to k^(-alpha) with alpha in (1, 2); infinite mean.

    The generating function is evaluated through the exact zeta-normalized
    series (a polylogarithm), because the tail exponent analysis is only
    meaningful for the untruncated law: any finite truncation has a finite
    mean and therefore tail exponent 1 near the origin.  The ``truncation``
    parameter governs the tabulated artifacts instead -- the sampling table
    and the partial-sum window used for exponent fitting -- and every report
    derived from the table records it.
    """

    exponent: float
    truncation: int = _DEFAULT_TABLE_CAP

    def __post_init__(self):
        if not (1.0 < self.exponent < 2.0):
            raise DistributionFormatError(
                f"power-law exponent must lie in (1,2), got {self.exponent!r}"
            )
        if not (isinstance(self.truncation, int) and self.truncation >= 100):
            raise DistributionFormatError(
                f"truncation must be an integer >= 100, got {self.truncation!r}"
            )

    # The crossover point between the direct series (small x) and the
    # expansion about 1 (large x); both are comfortably convergent there.
    _SPLIT = 0.6

    def _constants(self):
        return _powerlaw_constants(self.exponent)

    def _g_arr(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        small = x <= self._SPLIT
        out[small] = self._series_g(x[small])
        out[~small] = 1.0 - self._expansion_r(1.0 - x[~small])
        return out

    def _r1m_arr(self, u: np.ndarray) -> np.ndarray:
        out = np.empty_like(u)
        small = u <= 1.0 - self._SPLIT
        out[small] = self._expansion_r(u[small])
        out[~small] = 1.0 - self._series_g(1.0 - u[~small])
        return out

    def _series_g(self, x: np.ndarray) -> np.ndarray:
        """Direct series sum of the pgf for x <= 0.6 (256 terms suffice)."""
        zeta_alpha, _, _ = self._constants()
        k = np.arange(1, 257, dtype=float)
        coeffs = k ** (-self.exponent) / zeta_alpha
        powers = np.power.outer(x, k)
        return (powers * coeffs).sum(axis=-1)

    def _expansion_r(self, u: np.ndarray) -> np.ndarray:
        """level_map(1-u) by the expansion of the polylog about 1.

        R(1-u) = [ -Gamma(1-a) s^(a-1) - sum_{j>=1} zeta(a-j)(-s)^j/j! ] / zeta(a)
        with s = -log(1-u); accurate in relative terms down to u = 0.
        """
        zeta_alpha, gamma_term, zeta_tail = self._constants()
        s = -np.log1p(-u)
        with np.errstate(divide="ignore"):
            lead = -gamma_term * s ** (self.exponent - 1.0)
        lead = np.where(s == 0.0, 0.0, lead)
        js = np.arange(1, len(zeta_tail) + 1, dtype=float)
        term_coeffs = -zeta_tail * (-1.0) ** js / _factorials(len(zeta_tail))
        correction = (np.power.outer(s, js) * term_coeffs).sum(axis=-1)
        return (lead + correction) / zeta_alpha

    def pgf_jet(self, x0: float, order: int) -> Jet:
        """Jet via exact polylogarithm derivatives (mpmath under the hood).

        d/dx Li_s(x) = Li_{s-1}(x)/x gives x^j G^(j)(x) as an integer
        combination of Li_{alpha-i}(x), i <= j.
        """
        import mpmath

        alpha = self.exponent
        if x0 <= 0.0:
            coeffs = [0.0] + [self.mass(j) for j in range(1, order + 1)]
            return Jet(tuple(coeffs))
        if x0 >= 1.0:
            raise InfiniteDerivativeError(
                f"{self.spec_string()} has diverging derivatives at 1"
            )
        with mpmath.workdps(30):
            zeta_alpha = mpmath.zeta(alpha)
            li = [None] + [
                mpmath.polylog(alpha - i, x0) for i in range(1, order + 1)
            ]
            coeffs = [float(mpmath.polylog(alpha, x0) / zeta_alpha)]
            # c[i] tracks x^j G^(j) = sum_i c[i] Li_{alpha-i}; differentiate:
            # c'[i] = c[i-1] - j*c[i].
            c = [0.0, 1.0]
            fact = 1.0
            for j in range(1, order + 1):
                fact *= j
                val = sum(c[i] * li[i] for i in range(1, len(c)))
                coeffs.append(float(val / (zeta_alpha * mpmath.mpf(x0) ** j)) / fact)
                c = [0.0] + [
                    (c[i - 1] if i - 1 < len(c) else 0.0) - j * (c[i] if i < len(c) else 0.0)
                    for i in range(1, len(c) + 1)
                ]
        return Jet(tuple(coeffs))

    def mean(self) -> float:
        return math.inf

    def min_support(self) -> int:
        return 1

    def mass(self, k: int) -> float:
        k = int(k)
        if k < 1:
            return 0.0
        zeta_alpha, _, _ = self._constants()
        return k ** (-self.exponent) / zeta_alpha

    def tabulated_masses(self) -> tuple[np.ndarray, np.ndarray]:
        """(k, p_k) renormalized over 1..truncation; the sampling table."""
        ks = np.arange(1, self.truncation + 1, dtype=np.int64)
        probs = ks.astype(float) ** (-self.exponent)
        probs /= probs.sum()
        return ks, probs

    def offspring_sampler(self, cap: int | None = None) -> _TableSampler:
        cap = cap or self.truncation
        ks = np.arange(1, cap + 1, dtype=np.int64)
        probs = ks.astype(float) ** (-self.exponent)
        zeta_alpha, _, _ = self._constants()
        tail = 1.0 - probs.sum() / zeta_alpha
        return _TableSampler(ks, probs / probs.sum(), truncated_at=cap, tail_mass=tail)

    def spec_dict(self) -> dict:
        return {"kind": "powerlaw", "alpha": self.exponent, "truncation": self.truncation}

    def spec_string(self) -> str:
        if self.truncation == _DEFAULT_TABLE_CAP:
            return f"powerlaw:{self.exponent!r}"
        return f"powerlaw:{self.exponent!r},{self.truncation}"


@functools.lru_cache(maxsize=8)
def _powerlaw_constants(alpha: float):
    """(zeta(alpha), Gamma(1-alpha), zeta(alpha-j) for j=1..48) via mpmath."""
    import mpmath

    with mpmath.workdps(40):
        zeta_alpha = float(mpmath.zeta(alpha))
        gamma_term = float(mpmath.gamma(1.0 - alpha))
        tail = np.array([float(mpmath.zeta(alpha - j)) for j in range(1, 49)])
    return zeta_alpha, gamma_term, tail


@functools.lru_cache(maxsize=4)
def _factorials(n: int) -> np.ndarray:
    return np.array([math.factorial(j) for j in range(1, n + 1)], dtype=float)


# ---------------------------------------------------------------------------
# specification parsing (shared by the CLI and config files)


_KIND_BUILDERS = {}


def _register(kind: str):
    def deco(fn):
        _KIND_BUILDERS[kind] = fn
        return fn

    return deco


@_register("finite")
def _build_finite(d: dict) -> FiniteSupport:
    masses = d.get("masses")
    if not isinstance(masses, dict) or not masses:
        raise DistributionFormatError("finite kind needs a non-empty 'masses' object")
    try:
        table = {int(k): float(v) for k, v in masses.items()}
    except (TypeError, ValueError) as exc:
        raise DistributionFormatError(f"bad finite mass table: {exc}") from exc
    return FiniteSupport.from_masses(table)


@_register("regular")
def _build_regular(d: dict) -> Regular:
    return Regular(_as_int(d, "degree"))


@_register("geometric")
def _build_geometric(d: dict) -> Geometric:
    return Geometric(_as_float(d, "p"))


@_register("involution_b")
def _build_invb(d: dict) -> InvolutionB:
    return InvolutionB(_as_int(d, "index"))


@_register("involution_c")
def _build_invc(d: dict) -> InvolutionC:
    return InvolutionC(_as_int(d, "index"))


@_register("powerlaw")
def _build_powerlaw(d: dict) -> PowerLaw:
    trunc = d.get("truncation", _DEFAULT_TABLE_CAP)
    try:
        trunc = int(trunc)
    except (TypeError, ValueError) as exc:
        raise DistributionFormatError(f"bad truncation: {trunc!r}") from exc
    return PowerLaw(_as_float(d, "alpha"), trunc)


def _as_int(d: dict, key: str) -> int:
    try:
        v = d[key]
    except KeyError:
        raise DistributionFormatError(f"missing field {key!r}") from None
    try:
        iv = int(v)
    except (TypeError, ValueError) as exc:
        raise DistributionFormatError(f"field {key!r} must be an integer, got {v!r}") from exc
    if float(iv) != float(v):
        raise DistributionFormatError(f"field {key!r} must be an integer, got {v!r}")
    return iv


def _as_float(d: dict, key: str) -> float:
    try:
        return float(d[key])
    except KeyError:
        raise DistributionFormatError(f"missing field {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise DistributionFormatError(f"field {key!r} must be a number") from exc


def distribution_from_dict(d: dict) -> OffspringDistribution:
    """Build a distribution from a JSON-style object with a 'kind' field."""
    if not isinstance(d, dict):
        raise DistributionFormatError(f"expected an object, got {type(d).__name__}")
    kind = d.get("kind")
    builder = _KIND_BUILDERS.get(kind)
    if builder is None:
        raise DistributionFormatError(
            f"unknown kind {kind!r}; expected one of {sorted(_KIND_BUILDERS)}"
        )
    return builder(d)


def parse_distribution(text: str) -> OffspringDistribution:
    """Parse the mini-grammar or inline JSON.

    Grammar: ``finite:k=p,...``, ``geometric:p``, ``regular:d``,
    ``powerlaw:alpha[,N]``, ``invb:n``, ``invc:n``.  A string starting with
    '{' is parsed as the JSON object form instead.
    """
    text = text.strip()
    if not text:
        raise DistributionFormatError("empty distribution spec")
    if text.startswith("{"):
        try:
            return distribution_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DistributionFormatError(f"bad JSON distribution spec: {exc}") from exc
    kind, sep, rest = text.partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise DistributionFormatError(
            f"bad distribution spec {text!r}: expected 'kind:params'"
        )
    rest = rest.strip()
    try:
        if kind == "finite":
            masses = {}
            for item in rest.split(","):
                k, eq, p = item.partition("=")
                if not eq:
                    raise DistributionFormatError(
                        f"bad finite entry {item!r}: expected 'k=p'"
                    )
                masses[k.strip()] = float(p)
            return distribution_from_dict({"kind": "finite", "masses": masses})
        if kind == "regular":
            return distribution_from_dict({"kind": "regular", "degree": int(rest)})
        if kind == "geometric":
            return distribution_from_dict({"kind": "geometric", "p": float(rest)})
        if kind == "invb":
            return distribution_from_dict({"kind": "involution_b", "index": int(rest)})
        if kind == "invc":
            return distribution_from_dict({"kind": "involution_c", "index": int(rest)})
        if kind == "powerlaw":
            parts = [s.strip() for s in rest.split(",")]
            spec = {"kind": "powerlaw", "alpha": float(parts[0])}
            if len(parts) > 1:
                spec["truncation"] = int(parts[1])
            if len(parts) > 2:
                raise DistributionFormatError(
                    f"powerlaw takes at most two parameters, got {rest!r}"
                )
            return distribution_from_dict(spec)
    except DistributionFormatError:
        raise
    except ValueError as exc:
        raise DistributionFormatError(f"bad distribution spec {text!r}: {exc}") from exc
    raise DistributionFormatError(
        f"unknown distribution kind {kind!r}; expected one of "
        "finite, regular, geometric, invb, invc, powerlaw"
    )
