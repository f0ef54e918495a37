"""Rescaled fluctuation laws around the atoms of the limit.

Three regimes, selected by the multiplier xi at the fixed point: a
tabulated continuous law obtained by pulling grid offsets back through
the conditioned map (xi finite and above 1), a polynomial-window atom
pair at tangencies (xi equal to 1), and a double-exponential regime for
heavy tails (xi infinite), described by a regular-variation exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from mpmath import mp

from .distributions import OffspringDistribution, PowerLaw
from .errors import (
    AssumptionViolatedError,
    DerivativeOrderNotFoundError,
    InsufficientConditionedSamplesError,
    NoConvergenceError,
    PrecisionLossError,
)
from .fixedpoints import MAX_JET_ORDER, FixedPointRecord, find_fixed_points
from .simulate import SimConfig, run_samples

CAUCHY_TOL = 1e-12
RESIDUAL_TOL = 1e-8
DEFAULT_MAX_N = 2000
EXTENDED_PRECISION_BITS = 192
FIT_RESIDUAL_MAX = 0.02
QUANTILE_LEVELS = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class CaseA:
    xi: float
    grid: tuple[float, ...]
    F_V: tuple[float, ...]
    escalated: int

    def as_dict(self) -> dict:
        return {
            "variant": "case_a",
            "xi": self.xi,
            "escalated": self.escalated,
            "table": [[x, v] for x, v in zip(self.grid, self.F_V)],
        }


@dataclass(frozen=True)
class CaseB:
    k: int
    a: float
    mass_plus: float
    mass_minus: float

    def as_dict(self) -> dict:
        return {
            "variant": "case_b",
            "k": self.k,
            "a": self.a,
            "mass_plus": self.mass_plus,
            "mass_minus": self.mass_minus,
        }


@dataclass(frozen=True)
class CaseC:
    K: int
    rho: float
    exponent: float
    C0: float
    C1: float
    c: float
    fit_residual: float

    def as_dict(self) -> dict:
        return {
            "variant": "case_c",
            "K": self.K,
            "rho": self.rho,
            "exponent": self.exponent,
            "C0": self.C0,
            "C1": self.C1,
            "c": self.c,
            "fit_residual": self.fit_residual,
        }


ScalingRegime = Union[CaseA, CaseB, CaseC]


def default_case_a_grid(points_per_side: int = 100,
                        inner: float = 1e-3, outer: float = 1e3) -> np.ndarray:
    """Geometric offsets covering [inner, outer] on both sides, plus 0."""
    pos = np.geomspace(inner, outer, points_per_side)
    return np.concatenate([-pos[::-1], [0.0], pos])


def conditioned_map(dist: OffspringDistribution,
                    fp: FixedPointRecord) -> tuple[Callable, float, float]:
    """Map rescaled to the flanking interval; returns (map, q-tilde, width)."""
    width = fp.q_plus - fp.q_minus
    if width <= 0.0:
        raise ValueError("fixed point has a degenerate flanking interval")
    lo = fp.q_minus

    def f_tilde(u):
        return (dist.two_level_map(u * width + lo) - lo) / width

    return f_tilde, (fp.q - lo) / width, width


_EPS = float(np.finfo(float).eps)


def _pullback_double(f_tilde, q_tilde: float, xi: float, xs: np.ndarray,
                     max_n: int, escalate: bool):
    """Per-point limits of f-tilde^n(q-tilde + x/xi^n) in double precision.

    Restarting from q-tilde + x/xi^n amplifies the rounding of the start
    by xi^n, so each increment sequence decays geometrically until it
    meets a noise envelope that itself grows like eps * xi^n. Points whose
    increments bottom out or sign-flip inside the envelope before meeting
    the Cauchy cut are handed to the extended-precision rescue, as are
    points whose offset underflows double outright. A sign flip well above
    the envelope is a real monotonicity violation and raises.

    Returns (values, needs_mp, resume_n, floor_mag).
    """
    m = len(xs)
    out = np.full(m, np.nan)
    prev = np.full(m, np.nan)
    prev_mag = np.full(m, np.inf)
    mono = np.zeros(m)
    # Increment signs are only meaningful once the pulled-back offset is
    # deep inside the linearization region around the anchor; before that
    # the higher-order terms compete and the sequence may legitimately
    # oscillate (pronounced for multipliers near 1, where the offset
    # shrinks by a few percent per step). Endpoint anchors never mature
    # by this rule, and never need to: with no anchor rounding to
    # amplify, their sequences converge in double.
    linear_region = 0.05 * min(q_tilde, 1.0 - q_tilde)
    needs_mp = np.zeros(m, dtype=bool)
    resume_n = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)
    zero = xs == 0.0
    out[zero] = q_tilde
    active &= ~zero
    # An anchor sitting on an endpoint of [0, 1] is approached from one
    # side only; offsets on the far side stay clamped at every n, and the
    # clamp value is their limit (the stable side collapses to the
    # endpoint).
    if q_tilde <= 0.0:
        far = xs < 0.0
        out[far] = 0.0
        active &= ~far
    if q_tilde >= 1.0:
        far = xs > 0.0
        out[far] = 1.0
        active &= ~far
    scale = 1.0
    for n in range(1, max_n + 1):
        scale /= xi
        envelope = 128.0 * _EPS / scale
        starts = q_tilde + xs * scale
        under = active & (starts == q_tilde) & (xs != 0.0)
        if under.any():
            needs_mp |= under
            resume_n[under] = n
            active &= ~under
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        # A raw start outside (0, 1) clips to an endpoint the map fixes, so
        # consecutive n give bit-identical iterates there. Those zero deltas
        # are clipping artifacts, not convergence; the Cauchy bookkeeping
        # below only sees a point once its start has actually entered.
        entered = (starts[idx] > 0.0) & (starts[idx] < 1.0)
        v = np.clip(starts[idx], 0.0, 1.0)
        for _ in range(n):
            v = f_tilde(v)
        delta = v - prev[idx]
        mag = np.abs(delta)
        if n > 1:
            done = mag < CAUCHY_TOL
            out[idx[done]] = v[done]
            active[idx[done]] = False

            moved = mag > 10.0 * CAUCHY_TOL
            mature = np.abs(xs[idx]) * scale < linear_region
            flipped = moved & (mono[idx] * np.sign(delta) < 0)
            if np.any(mature & flipped & (mag >= envelope) & ~done):
                raise AssumptionViolatedError(
                    "pullback sequence lost monotonicity; the map is not "
                    "behaving like an expansion around this fixed point"
                )
            floored = mature & ~done & (mag < envelope) & (
                (mag >= prev_mag[idx]) | flipped
            )
            if np.any(floored):
                hit = idx[floored]
                needs_mp[hit] = True
                resume_n[hit] = n
                active[hit] = False
            mono[idx] = np.where(moved & mature, np.sign(delta), mono[idx])
        prev[idx[entered]] = v[entered]
        prev_mag[idx[entered]] = mag[entered]
    if not escalate and needs_mp.any():
        raise PrecisionLossError(
            "increments underflowed double precision before convergence; "
            "rerun with extended precision"
        )
    if np.any(active):
        raise NoConvergenceError(
            f"{int(active.sum())} grid points missed the Cauchy criterion "
            f"within {max_n} iterations"
        )
    return out, needs_mp, resume_n, prev_mag


def _pullback_mp(dist: OffspringDistribution, fp: FixedPointRecord,
                 x: float, resume_n: int, floor_mag: float, max_n: int) -> float:
    """Extended-precision rescue for one grid offset.

    Extended floats have no visible noise floor here, so rather than
    sweeping every n we jump ahead far enough for the geometric decay to
    put successive limits within the Cauchy cut, then confirm with an
    adjacent pair.
    """
    if not math.isfinite(floor_mag) or floor_mag <= 0.0:
        floor_mag = 1e-9
    jump = math.ceil(math.log(floor_mag / (0.1 * CAUCHY_TOL)) / math.log(fp.xi))
    n0 = min(resume_n + max(jump, 1), max_n)

    with mp.workprec(EXTENDED_PRECISION_BITS):
        lo = mp.mpf(fp.q_minus)
        width = mp.mpf(fp.q_plus) - lo
        xi = mp.mpf(fp.xi)
        xm = mp.mpf(x)

        # The restart anchor must be a fixed point to working precision:
        # the double value carries ~1e-16 of error, and the jump ahead
        # multiplies whatever error the anchor has by xi^n. Fixed-slope
        # Newton on f(u) - u squeezes it out in a few steps (the slope at
        # the root is xi - 1, known to double accuracy, which leaves a
        # per-step contraction near 1e-16). The flanking endpoints need no
        # such treatment because they enter only through the conjugation
        # u -> u * width + lo, which is exact for any fixed lo and width.
        q_ref = mp.mpf(fp.q)
        for _ in range(6):
            step = (dist.mp_two_level_map(q_ref) - q_ref) / (xi - 1)
            q_ref -= step
            if abs(step) < mp.mpf(2) ** -(3 * EXTENDED_PRECISION_BITS // 4):
                break
        q_t = (q_ref - lo) / width

        def g_at(n: int) -> float:
            s = q_t + xm / xi**n
            if s == q_t:
                raise PrecisionLossError(
                    "offset underflowed extended precision before convergence"
                )
            v = min(max(s, mp.mpf(0)), mp.mpf(1))
            for _ in range(n):
                v = (dist.mp_two_level_map(v * width + lo) - lo) / width
            return float(v)

        prev = g_at(n0)
        for n in range(n0 + 1, max_n + 1):
            g = g_at(n)
            if abs(g - prev) < CAUCHY_TOL:
                return g
            prev = g
    raise NoConvergenceError(
        f"extended-precision pullback missed the Cauchy criterion within {max_n} iterations"
    )


def _solve_points(dist, fp, f_tilde, q_tilde, xs, max_n, precision):
    values, needs_mp, resume_n, floor_mag = _pullback_double(
        f_tilde, q_tilde, fp.xi, xs, max_n, escalate=(precision == "extended")
    )
    for i in np.flatnonzero(needs_mp):
        values[i] = _pullback_mp(dist, fp, xs[i], int(resume_n[i]), float(floor_mag[i]), max_n)
    return values, int(needs_mp.sum())


def solve_case_a(dist: OffspringDistribution, fp: FixedPointRecord,
                 grid=None, max_n: int = DEFAULT_MAX_N,
                 precision: str = "extended") -> CaseA:
    """Tabulate the rescaled law around an expanding fixed point.

    Each grid offset x is pulled back through n applications of the
    conditioned map from q-tilde + x/xi^n, restarting with growing n
    until successive limits agree to 1e-12. One-sided instabilities give
    one-sided tables (the stable side collapses to the flanking interval
    endpoint). The finished table is verified against the functional
    equation F_V(x) = f-tilde(F_V(x/xi)) before being returned.
    """
    # the band matches the tangent regime's acceptance test, so the two
    # solvers partition the multipliers with no gap
    if not (1.0 + 1e-9 < fp.xi < math.inf):
        raise ValueError(f"case A needs a finite multiplier above 1, got {fp.xi}")
    if not (fp.stability.unstable_left or fp.stability.unstable_right):
        raise ValueError("case A applies to unstable fixed points only")
    if precision not in ("double", "extended"):
        raise ValueError(f"unknown precision mode {precision!r}")
    xs = np.sort(np.asarray(default_case_a_grid() if grid is None else grid, dtype=float))
    f_tilde, q_tilde, _ = conditioned_map(dist, fp)
    values, escalated = _solve_points(dist, fp, f_tilde, q_tilde, xs, max_n, precision)

    inner = xs[1:-1]
    shifted, _ = _solve_points(dist, fp, f_tilde, q_tilde, inner / fp.xi, max_n, precision)
    residual = np.max(np.abs(values[1:-1] - f_tilde(shifted)))
    if residual > RESIDUAL_TOL:
        raise AssumptionViolatedError(
            f"functional-equation residual {residual:.3e} exceeds {RESIDUAL_TOL}"
        )
    if np.any(np.diff(values) < -1e-12):
        raise AssumptionViolatedError("tabulated law is not monotone")
    return CaseA(xi=fp.xi, grid=tuple(xs), F_V=tuple(values), escalated=escalated)


def _derivative_order(dist: OffspringDistribution, q: float) -> tuple[int, float]:
    jet = dist.two_level_jet(q, MAX_JET_ORDER)
    for r in range(2, MAX_JET_ORDER + 1):
        d = jet.derivative(r)
        if abs(d) > 1e-9:
            return r, d
    raise DerivativeOrderNotFoundError(
        f"all derivatives of order 2..{MAX_JET_ORDER} vanish at {q}"
    )


def solve_case_b(dist: OffspringDistribution, fp: FixedPointRecord) -> CaseB:
    """Atom pair and polynomial window width at a tangent fixed point."""
    if abs(fp.xi - 1.0) > 1e-9:
        raise ValueError(f"case B needs xi = 1, got xi = {fp.xi}")
    if not (fp.stability.unstable_left or fp.stability.unstable_right):
        raise ValueError("case B applies to unstable fixed points only")
    k, deriv = _derivative_order(dist, fp.q)
    # mirror-image the map for points unstable from the left only, so the
    # leading coefficient driving the escape is positive either way
    signed = deriv if fp.stability.unstable_right else -deriv
    if signed <= 0.0:
        raise AssumptionViolatedError(
            "leading derivative sign contradicts the stability class"
        )
    a = (k * math.factorial(k - 2) / signed) ** (1.0 / (k - 1))
    width = fp.q_plus - fp.q_minus
    return CaseB(
        k=k,
        a=a,
        mass_plus=(fp.q_plus - fp.q) / width,
        mass_minus=(fp.q - fp.q_minus) / width,
    )


def solve_case_c(dist: OffspringDistribution, n_max: int | None = None) -> CaseC:
    """Heavy-tail regime from the partial-sum growth of k p_k.

    Fits sum_{k<=n} k p_k ~ c n^rho by least squares on a log-log window
    of every integer n in [100, n_max/10], then forms the endpoint
    constants of f(t) ~ C0 t^{K(1-rho)} and 1 - f(1-t) ~ C1-style tails.
    """
    if n_max is None:
        n_max = dist.truncation if isinstance(dist, PowerLaw) else 10**5
    hi = n_max // 10
    if hi <= 100:
        raise ValueError("need a fit window reaching past n = 100")
    masses = np.array([dist.mass(k) for k in range(1, hi + 1)])
    partial = np.cumsum(np.arange(1, hi + 1) * masses)
    ns = np.arange(100, hi + 1)
    log_n = np.log(ns)
    log_s = np.log(partial[ns - 1])
    fit = np.polyfit(log_n, log_s, 1)
    rho, log_c = float(fit[0]), float(fit[1])
    fit_residual = float(np.sqrt(np.mean((log_s - (rho * log_n + log_c)) ** 2)))
    if fit_residual > FIT_RESIDUAL_MAX:
        raise AssumptionViolatedError(
            f"partial sums are not a clean power law (rms {fit_residual:.3g} in log scale)"
        )
    if not 0.0 < rho < 1.0:
        raise AssumptionViolatedError(f"growth exponent {rho:.4f} outside (0, 1)")
    big_k = dist.min_support()
    exponent = big_k * (1.0 - rho)
    if not 0.0 < exponent < 1.0:
        raise AssumptionViolatedError(
            f"K(1-rho) = {exponent:.4f} outside (0, 1); the double-exponential "
            "regime does not apply"
        )
    c = float(np.exp(log_c))
    p_k = float(dist.mass(big_k))
    base = c * math.gamma(1.0 + rho) / (1.0 - rho)
    c0 = base * p_k ** (1.0 - rho)
    c1 = p_k * base**big_k
    if abs(c0 - 1.0) < 1e-12 and abs(c1 - 1.0) < 1e-12:
        raise AssumptionViolatedError(
            "both endpoint constants are exactly 1, which indicates a numerical fault"
        )
    return CaseC(K=big_k, rho=rho, exponent=exponent,
                 C0=c0, C1=c1, c=c, fit_residual=fit_residual)


@dataclass(frozen=True)
class CaseCVerification:
    exponent: float
    quantile_levels: tuple[float, ...]
    depths: tuple[int, ...]
    quantiles: tuple[tuple[float, ...], ...]
    drifts: tuple[float, ...]
    conditioned_counts: tuple[int, ...]
    acceptance_rates: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "quantile_levels": list(self.quantile_levels),
            "rows": [
                {"depth": d, "quantiles": list(q), "conditioned": c, "acceptance": a}
                for d, q, c, a in zip(self.depths, self.quantiles,
                                      self.conditioned_counts, self.acceptance_rates)
            ],
            "drifts": list(self.drifts),
        }


def verify_case_c_scaling(dist: OffspringDistribution, regime: CaseC,
                          depth_n: int, samples: int, seed: int = 0,
                          node_budget: int = 10**7) -> CaseCVerification:
    """Monte Carlo check that -exponent^n log W stabilizes across depths.

    Samples even depths 2, 4, ..., 2*depth_n, keeps roots in (0, q_plus]
    by rejection, transforms them, and reports quantiles per depth plus
    the maximum quantile drift between successive depths.
    """
    if abs(regime.C0 - 1.0) < 1e-12 and abs(regime.C1 - 1.0) < 1e-12:
        raise ValueError("regime carries no scaling information")
    records = find_fixed_points(dist)
    q_plus = records[0].q_plus
    alpha = regime.exponent
    depths, rows, counts, rates = [], [], [], []
    for n in range(1, depth_n + 1):
        cfg = SimConfig(dist, depth=2 * n, samples=samples,
                        seed=seed + n, node_budget=node_budget)
        result = run_samples(cfg)
        w = result.values
        kept = w[(w > 0.0) & (w <= q_plus)]
        if len(kept) < 100:
            raise InsufficientConditionedSamplesError(
                f"only {len(kept)} of {samples} samples landed in (0, {q_plus:.4f}] "
                f"at depth {2 * n}"
            )
        transformed = -(alpha**n) * np.log(kept)
        rows.append(tuple(np.quantile(transformed, QUANTILE_LEVELS)))
        depths.append(2 * n)
        counts.append(len(kept))
        rates.append(len(kept) / result.attempted)
    drifts = tuple(
        float(np.max(np.abs(np.array(rows[i + 1]) - np.array(rows[i]))))
        for i in range(len(rows) - 1)
    )
    return CaseCVerification(
        exponent=alpha,
        quantile_levels=QUANTILE_LEVELS,
        depths=tuple(depths),
        quantiles=tuple(rows),
        drifts=drifts,
        conditioned_counts=tuple(counts),
        acceptance_rates=tuple(rates),
    )
