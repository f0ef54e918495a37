"""Fixed points of the two-level map and the unscaled limit law.

The two-level map f is increasing with f(0) = 0 and f(1) = 1, and the
depth-2n game value satisfies P(value <= x) = f^n(x) under uniform leaves.
Everything about the n -> infinity limit is therefore encoded in the fixed
points of f: iterates of any starting point converge to one, the limit is
discrete with atoms exactly at the fixed points that are unstable from at
least one side, and the mass of each atom is the length of the interval
swept into it.

Identity families (f equal to the identity everywhere) are detected first
and reported through IdentityMapError rather than as an absurd list of ten
thousand fixed points.
"""

from __future__ import annotations

import dataclasses
import enum

import numpy as np
from scipy import optimize

from .distributions import OffspringDistribution
from .errors import (
    AssumptionViolatedError,
    IdentityMapError,
    InfiniteDerivativeError,
    UnresolvedTouchpointError,
)

__all__ = [
    "Stability",
    "FixedPointRecord",
    "LimitLaw",
    "find_fixed_points",
    "limit_law",
    "is_identity",
    "endpoint_atom_criterion",
    "EndpointAtoms",
    "iterate_map",
    "curve_table",
    "FIXED_POINT_TOL",
    "TOUCH_THRESHOLD",
]

FIXED_POINT_TOL = 1e-11
TOUCH_THRESHOLD = 1e-8
GRID_SIZE = 10_000
MAX_JET_ORDER = 12
# How far f'(q) may sit from 1 while the point is still treated as a
# tangency (and the first higher nonzero derivative is looked up).
_TANGENT_SLOPE_BAND = 1e-6


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE_LEFT = "unstable_left"
    UNSTABLE_RIGHT = "unstable_right"
    UNSTABLE_BOTH = "unstable_both"

    @property
    def unstable_left(self) -> bool:
        return self in (Stability.UNSTABLE_LEFT, Stability.UNSTABLE_BOTH)

    @property
    def unstable_right(self) -> bool:
        return self in (Stability.UNSTABLE_RIGHT, Stability.UNSTABLE_BOTH)


class EndpointAtoms(str, enum.Enum):
    NO_ENDPOINT_ATOMS = "no_endpoint_atoms"
    ENDPOINT_ATOMS = "endpoint_atoms"
    BOUNDARY_CASE = "boundary_case"


@dataclasses.dataclass(frozen=True)
class FixedPointRecord:
    """One fixed point of the two-level map.

    ``xi`` is f'(q) (infinite for heavy-tail laws at the endpoints);
    ``order_k`` is the first derivative order above 1 that does not vanish,
    filled in when the slope is tangent (xi = 1) and None otherwise;
    ``q_minus``/``q_plus`` are the neighboring fixed points on each side
    the point is unstable toward, and the point itself on sides it is not.
    The q_plus - q_minus difference is the atom mass in the limit law.
    """

    q: float
    xi: float
    order_k: int | None
    stability: Stability
    q_minus: float
    q_plus: float

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "xi": self.xi,
            "order_k": self.order_k,
            "stability": self.stability.value,
            "q_minus": self.q_minus,
            "q_plus": self.q_plus,
        }


@dataclasses.dataclass(frozen=True)
class LimitLaw:
    """Limit distribution of the game value.

    Either the uniform law on [0,1] (identity families) or a discrete law
    whose atoms sit at the unstable fixed points.
    """

    variant: str  # "identity_uniform" | "discrete"
    atoms: tuple[tuple[float, float], ...] = ()

    @property
    def is_uniform(self) -> bool:
        return self.variant == "identity_uniform"

    def cdf(self, x):
        xs = np.asarray(x, dtype=float)
        if self.is_uniform:
            out = np.clip(xs, 0.0, 1.0)
        else:
            out = np.zeros_like(xs)
            for loc, mass in self.atoms:
                out = out + mass * (xs >= loc)
        if np.isscalar(x) or getattr(x, "ndim", None) == 0:
            return float(out)
        return out

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "atoms": [{"q": q, "mass": m} for q, m in self.atoms],
        }


def is_identity(dist: OffspringDistribution, grid_size: int = 1000,
                tol: float = 1e-10) -> bool:
    """Whether the two-level map is the identity within tol on a grid."""
    if grid_size < 100:
        raise ValueError(f"grid_size must be at least 100, got {grid_size}")
    x = np.linspace(0.0, 1.0, grid_size + 1)
    return float(np.max(np.abs(dist.two_level_map(x) - x))) <= tol


def iterate_map(dist: OffspringDistribution, x, n: int):
    """n-fold composition of the two-level map (the depth-2n CDF)."""
    out = _as_array(x)
    for _ in range(n):
        out = dist.two_level_map(out)
    if np.isscalar(x) or getattr(x, "ndim", None) == 0:
        return float(out)
    return out


def curve_table(dist: OffspringDistribution, grid_size: int = GRID_SIZE):
    """(x, f(x) - x) on a uniform grid; the data behind the phase portraits."""
    x = np.linspace(0.0, 1.0, grid_size + 1)
    return x, dist.two_level_map(x) - x


def endpoint_atom_criterion(dist: OffspringDistribution) -> EndpointAtoms:
    """Whether the limit law puts mass on {0, 1}, by the slope p1 * mean.

    The slope of f at both endpoints equals p1 * mean.  Below 1 the
    endpoints attract nothing (no atoms); above 1 (including infinite mean
    with p1 > 0) they do; the knife edge and the 0 * infinity case are
    reported as boundary.
    """
    p1 = dist.p1
    mu = dist.mean()
    if not np.isfinite(mu):
        return EndpointAtoms.ENDPOINT_ATOMS if p1 > 0 else EndpointAtoms.BOUNDARY_CASE
    slope = p1 * mu
    if abs(slope - 1.0) <= 1e-12:
        return EndpointAtoms.BOUNDARY_CASE
    if slope < 1.0:
        return EndpointAtoms.NO_ENDPOINT_ATOMS
    return EndpointAtoms.ENDPOINT_ATOMS


def find_fixed_points(
    dist: OffspringDistribution,
    tol: float = FIXED_POINT_TOL,
    grid_size: int = GRID_SIZE,
    touch_threshold: float = TOUCH_THRESHOLD,
) -> list[FixedPointRecord]:
    """All fixed points of the two-level map, classified.

    Sign changes of f(x) - x on a dense grid are refined by bracketed root
    finding; local extrema of f(x) - x that approach zero without crossing
    are candidate tangencies, polished and either accepted (residual within
    tol), reported as UnresolvedTouchpointError (between tol and the touch
    threshold: genuinely ambiguous at this precision), or discarded.

    Raises IdentityMapError for identity families, where every point is
    fixed and a list would be meaningless.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if is_identity(dist):
        raise IdentityMapError(
            f"{dist.spec_string()}: the two-level map is the identity; "
            "every point of [0,1] is fixed"
        )

    x = np.linspace(0.0, 1.0, grid_size + 1)
    d = dist.two_level_map(x) - x

    def gap(t: float) -> float:
        return dist.two_level_map(t) - t

    locations: list[float] = [0.0, 1.0]

    # --- crossings ---------------------------------------------------------
    for i in range(1, grid_size):
        if d[i] == 0.0:
            locations.append(float(x[i]))
        elif d[i] * d[i + 1] < 0.0:
            root = optimize.brentq(gap, x[i], x[i + 1], xtol=1e-15, rtol=9e-16)
            locations.append(float(root))

    # --- tangency candidates ----------------------------------------------
    for i in range(1, grid_size):
        left, mid, right = d[i - 1], d[i], d[i + 1]
        if mid == 0.0 or left * mid <= 0.0 or mid * right <= 0.0:
            continue  # crossing or exact root, already handled
        if not (abs(mid) <= abs(left) and abs(mid) <= abs(right)):
            continue  # not a local minimum of |f - x|
        if abs(mid) > 1e-4:
            continue  # nowhere near tangent
        sign = 1.0 if mid > 0 else -1.0
        res = optimize.minimize_scalar(
            lambda t: sign * gap(t), bounds=(x[i - 1], x[i + 1]), method="bounded",
            options={"xatol": 1e-14},
        )
        t, m_signed = float(res.x), sign * float(res.fun)
        if sign * m_signed < 0.0:
            # the extremum crosses zero: two roots hidden inside one cell
            locations.append(float(optimize.brentq(gap, x[i - 1], t, xtol=1e-15, rtol=9e-16)))
            locations.append(float(optimize.brentq(gap, t, x[i + 1], xtol=1e-15, rtol=9e-16)))
            continue
        t, residual = _polish_tangency(dist, t, m_signed)
        if residual <= tol:
            locations.append(t)
        elif residual <= touch_threshold:
            raise UnresolvedTouchpointError(location=t, residual=residual)
        # else: an ordinary non-tangent dip, not a fixed point

    # Tangential crossings (odd tangency order) sit in a cubic-flat noise
    # plateau where bracketing alone cannot localize them; polish those.
    locations = [
        _refine_tangent_location(dist, q) if 0.0 < q < 1.0 else q
        for q in locations
    ]
    locations = _dedupe(sorted(locations), spacing=1.0 / grid_size * 1e-3)

    # --- verify and classify ----------------------------------------------
    for q in locations:
        if abs(gap(q)) > tol:
            raise AssumptionViolatedError(
                f"refined fixed point {q!r} has residual {abs(gap(q)):.3e} > {tol:g}"
            )

    records = []
    for idx, q in enumerate(locations):
        lo = locations[idx - 1] if idx > 0 else None
        hi = locations[idx + 1] if idx + 1 < len(locations) else None
        xi, order_k = _slope_and_order(dist, q)
        stability = _classify(dist, q, lo, hi, tol)
        q_minus = lo if (stability.unstable_left and lo is not None) else q
        q_plus = hi if (stability.unstable_right and hi is not None) else q
        records.append(
            FixedPointRecord(q=q, xi=xi, order_k=order_k, stability=stability,
                             q_minus=q_minus, q_plus=q_plus)
        )
    return records


def limit_law(dist: OffspringDistribution, tol: float = FIXED_POINT_TOL) -> LimitLaw:
    """Limit law of the game value: uniform or discrete over unstable points."""
    try:
        records = find_fixed_points(dist, tol=tol)
    except IdentityMapError:
        return LimitLaw(variant="identity_uniform")
    atoms = tuple(
        (r.q, r.q_plus - r.q_minus)
        for r in records
        if r.stability is not Stability.STABLE
    )
    total = sum(m for _, m in atoms)
    if abs(total - 1.0) > 1e-9:
        raise AssumptionViolatedError(
            f"atom masses sum to {total!r}; the fixed-point structure is "
            "inconsistent (likely unresolved near-tangency)"
        )
    return LimitLaw(variant="discrete", atoms=atoms)


# ---------------------------------------------------------------------------
# internals


def _as_array(x):
    return np.asarray(x, dtype=float)


def _dedupe(sorted_locs: list[float], spacing: float) -> list[float]:
    out = [sorted_locs[0]]
    for q in sorted_locs[1:]:
        if q - out[-1] > spacing:
            out.append(q)
    return out


def _refine_tangent_location(dist: OffspringDistribution, q0: float) -> float:
    """Sharpen a fixed point whose slope is (near) 1.

    Near a tangency of order k the gap f(x) - x is k-th-order flat, so the
    bracketing root or minimum lands anywhere inside a rounding plateau of
    width (eps)^(1/k).  The (k-1)-th derivative has a simple zero at the
    true location, so Newton on it recovers machine precision.  k itself is
    read off the jet: derivatives below the tangency order are plateau-sized
    while f^(k) is of ordinary magnitude.

    Non-tangent points, infinite-derivative laws, and degenerate jets are
    returned unchanged; a polish that tries to leave the original grid cell
    is rejected as divergence.
    """
    try:
        probe = dist.two_level_jet(q0, 1)
    except InfiniteDerivativeError:
        return q0
    if abs(probe.derivative(1) - 1.0) > _TANGENT_SLOPE_BAND:
        return q0
    try:
        jet = dist.two_level_jet(q0, MAX_JET_ORDER)
    except InfiniteDerivativeError:
        return q0
    k = next(
        (r for r in range(2, MAX_JET_ORDER + 1) if abs(jet.derivative(r)) > 1e-4),
        None,
    )
    if k is None:
        return q0
    target = 1.0 if k == 2 else 0.0
    cur = q0
    for _ in range(40):
        jet = dist.two_level_jet(cur, k)
        num = jet.derivative(k - 1) - target
        den = jet.derivative(k)
        if den == 0.0:
            break
        nxt = min(max(cur - num / den, 0.0), 1.0)
        if abs(nxt - cur) < 1e-16:
            cur = nxt
            break
        cur = nxt
    if abs(cur - q0) > 1e-4:
        return q0
    return cur


def _polish_tangency(dist: OffspringDistribution, t: float, m_signed: float):
    """Location and residual for a touchpoint candidate.

    The location is polished by the tangency refinement above; the residual
    reported is the better of the polished and bracketed values, so a
    degenerate polish can never make a clean tangency look ambiguous.
    """
    cur = _refine_tangent_location(dist, t)
    residual = abs(dist.two_level_map(cur) - cur)
    fallback = abs(m_signed)
    if residual <= fallback:
        return cur, residual
    return t, fallback


def _slope_and_order(dist: OffspringDistribution, q: float):
    """(f'(q), first order r > 1 with nonvanishing derivative or None)."""
    try:
        xi = dist.two_level_jet(q, 1).derivative(1)
    except InfiniteDerivativeError:
        return float("inf"), None
    if abs(xi - 1.0) > _TANGENT_SLOPE_BAND:
        return xi, None
    order_k = None
    try:
        jet = dist.two_level_jet(q, MAX_JET_ORDER)
    except InfiniteDerivativeError:
        return xi, None
    for r in range(2, MAX_JET_ORDER + 1):
        if abs(jet.derivative(r)) > 1e-9:
            order_k = r
            break
    return xi, order_k


def _classify(dist, q, lo, hi, tol) -> Stability:
    """Stability from the sign of f - x on each side of q.

    Between consecutive fixed points the sign is constant, so probing once
    per side suffices; the probe sits at the documented delta but never
    beyond the midpoint to a neighbor, and escalates to the midpoint when
    the value drowns in rounding (very flat tangencies).
    """
    delta = 10.0 * tol ** 0.5

    def side_sign(neighbor, direction):
        if neighbor is None:
            return None
        probe = q + direction * min(delta, (abs(neighbor - q)) / 2.0)
        val = dist.two_level_map(probe) - probe
        if abs(val) < 1e-14:
            probe = (q + neighbor) / 2.0
            val = dist.two_level_map(probe) - probe
        return 1.0 if val > 0 else (-1.0 if val < 0 else 0.0)

    left = side_sign(lo, -1.0)
    right = side_sign(hi, +1.0)

    # +1 on the left means drift up toward q (attracting); +1 on the right
    # means drift up away from q (repelling), and symmetrically for -1.
    unstable_left = left is not None and left < 0
    unstable_right = right is not None and right > 0
    if unstable_left and unstable_right:
        return Stability.UNSTABLE_BOTH
    if unstable_left:
        return Stability.UNSTABLE_LEFT
    if unstable_right:
        return Stability.UNSTABLE_RIGHT
    return Stability.STABLE
