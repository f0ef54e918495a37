"""Command-line front end.

Six subcommands cover the library surface: ``analyze`` (fixed-point
structure and the limit law), ``curve`` (the two-level gap f(x) - x),
``scan`` (one-parameter family sweeps with transition bisection),
``simulate`` (Monte Carlo roots with the analytic comparison),
``scaling`` (rescaled-limit regimes around a fixed point), and
``endogeny`` (the shared-tree disagreement test).

Exit codes: 0 on success, 2 for configuration problems (bad flags, bad
distribution specs, points that are not fixed points), 3 when a
candidate tangency cannot be resolved at working precision, 4 when an
iteration fails to converge or a model assumption is violated, 5 when
the node budget dominates a simulation.

All artifacts are deterministic for a fixed command line: metadata
carries the tool version and the full configuration echo, never a
timestamp, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .distributions import (
    FiniteSupport,
    OffspringDistribution,
    parse_distribution,
)
from .endogeny import decide_endogeny, h_map
from .errors import (
    AssumptionViolatedError,
    BudgetExceededError,
    DerivativeOrderNotFoundError,
    DistributionFormatError,
    DomainError,
    IdentityMapError,
    InsufficientConditionedSamplesError,
    NoConvergenceError,
    NotAFixedPointError,
    PrecisionLossError,
    UnresolvedTouchpointError,
)
from .fixedpoints import (
    FixedPointRecord,
    Stability,
    curve_table,
    find_fixed_points,
    limit_law,
)
from .reports import run_meta, write_csv, write_json
from .scaling import (
    DEFAULT_MAX_N,
    default_case_a_grid,
    solve_case_a,
    solve_case_b,
    solve_case_c,
)
from .simulate import (
    DEFAULT_NODE_BUDGET,
    Bernoulli,
    BivariateBernoulli,
    EmpiricalCDF,
    SimConfig,
    Uniform01,
    ks_statistic,
    ks_threshold,
    run_samples,
)

# how close --at must land to a tabulated fixed point
AT_TOLERANCE = 1e-6
# bisection width for scan transition location
TRANSITION_WIDTH = 1e-6
COMPARISON_PROBES = tuple(i / 10 for i in range(1, 10))


def _analytic_cdf(dist: OffspringDistribution, depth: int) -> Callable:
    """Root CDF under uniform leaves: n two-level steps, pgf on odd tops."""
    half, odd = divmod(depth, 2)

    def cdf(x):
        v = np.asarray(x, dtype=float)
        for _ in range(half):
            v = dist.two_level_map(v)
        return dist.pgf(v) if odd else v

    return cdf


def _is_json(path: str | None) -> bool:
    return bool(path) and path.endswith(".json")


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    dist = parse_distribution(args.dist)
    try:
        records = find_fixed_points(dist)
    except IdentityMapError:
        records = []
    law = limit_law(dist)

    print(f"dist: {dist.spec_string()}")
    if records:
        print(f"fixed points ({len(records)}):")
        for r in records:
            print(
                f"  q={r.q!r}  xi={r.xi!r}  order_k={r.order_k}"
                f"  stability={r.stability.value}"
                f"  flank=[{r.q_minus!r}, {r.q_plus!r}]"
            )
    else:
        print("fixed points: every point of [0, 1] (identity family)")
    if law.is_uniform:
        print("limit law: uniform on [0, 1]")
    else:
        print("limit law: discrete")
        for q, mass in law.atoms:
            print(f"  atom q={q!r}  mass={mass!r}")

    if args.out:
        meta = run_meta("analyze", dist, precision="double")
        payload = {
            "fixed_points": [r.as_dict() for r in records],
            "limit_law": law.as_dict(),
        }
        write_json(args.out, payload, meta)
    return 0


# ------------------------------------------------------------------ curve


def cmd_curve(args) -> int:
    dist = parse_distribution(args.dist)
    xs, gap = curve_table(dist, grid_size=args.grid)
    meta = run_meta("curve", dist, grid=args.grid, precision="double")
    if _is_json(args.out):
        write_json(args.out, {"x": xs.tolist(), "f_minus_x": gap.tolist()}, meta)
    else:
        write_csv(args.out or sys.stdout, ["x", "f_minus_x"],
                  zip(xs.tolist(), gap.tolist()), meta)
    return 0


# ------------------------------------------------------------------- scan


def _parse_family(text: str) -> Callable[[float], FiniteSupport]:
    """One-parameter finite family; masses are 'p', '1-p', or a number."""
    prefix = "finite:"
    if not text.startswith(prefix):
        raise DistributionFormatError(
            "scan families are finite laws with masses 'p', '1-p', or a "
            "number, e.g. finite:1=p,3=1-p"
        )
    entries: list[tuple[int, Callable[[float], float]]] = []
    for part in text[len(prefix):].split(","):
        key, sep, expr = part.partition("=")
        expr = expr.strip()
        try:
            k = int(key)
        except ValueError:
            raise DistributionFormatError(
                f"bad family entry {part!r}: offspring count must be an integer"
            ) from None
        if not sep:
            raise DistributionFormatError(f"bad family entry {part!r}: missing '='")
        if expr == "p":
            fn: Callable[[float], float] = lambda p: p
        elif expr == "1-p":
            fn = lambda p: 1.0 - p
        else:
            try:
                const = float(expr)
            except ValueError:
                raise DistributionFormatError(
                    f"bad family mass {expr!r}: use 'p', '1-p', or a number"
                ) from None
            fn = lambda p, c=const: c
        entries.append((k, fn))
    if not entries:
        raise DistributionFormatError("family has no entries")

    def build(p: float) -> FiniteSupport:
        return FiniteSupport.from_masses({k: fn(p) for k, fn in entries})

    return build


def _classify(build: Callable[[float], FiniteSupport], p: float):
    """Fixed points at parameter p, or (None, reason) when ambiguous."""
    try:
        return find_fixed_points(build(p)), ""
    except UnresolvedTouchpointError:
        return None, "unresolved_touchpoint"
    except IdentityMapError:
        return None, "identity_family"


def cmd_scan(args) -> int:
    build = _parse_family(args.family)
    lo, hi, step = args.lo, args.hi, args.step
    if not (lo < hi):
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if not (0.0 < step <= hi - lo):
        raise ValueError(f"step {step} does not fit inside [{lo}, {hi}]")

    rows: list[tuple] = []
    states: list[tuple[float, int]] = []
    p = lo
    while p <= hi + 1e-12:
        recs, reason = _classify(build, p)
        if recs is None:
            rows.append((p, "", "", "", reason))
        else:
            locs = ";".join(repr(r.q) for r in recs)
            stabs = ";".join(r.stability.value for r in recs)
            rows.append((p, len(recs), locs, stabs, ""))
            states.append((p, len(recs)))
        p += step

    transitions: list[tuple[float, int, int, str]] = []
    for (p1, c1), (p2, c2) in zip(states, states[1:]):
        if c1 == c2:
            continue
        # bisect on the count; a refusal band inside the bracket is itself
        # the transition, so its midpoint is reported as the location
        a, b = p1, p2
        note = ""
        while b - a > TRANSITION_WIDTH:
            mid = 0.5 * (a + b)
            recs, _ = _classify(build, mid)
            if recs is None:
                note = "refusal_band"
                a = b = mid
                break
            if len(recs) == c1:
                a = mid
            else:
                b = mid
        loc = 0.5 * (a + b)
        transitions.append((loc, c1, c2, note))

    for loc, c1, c2, note in transitions:
        suffix = f" ({note})" if note else ""
        print(f"transition at p={loc!r}: fixed-point count {c1} -> {c2}{suffix}")
    if not transitions:
        print("no fixed-point count transitions in the scanned range")

    out_rows = rows + [
        (loc, "", "", "", f"count_change:{c1}->{c2}" + (f";{note}" if note else ""))
        for loc, c1, c2, note in transitions
    ]
    meta = run_meta("scan", family=args.family, lo=lo, hi=hi, step=step,
                    precision="double")
    header = ["parameter", "fixed_points", "locations", "stabilities", "event"]
    if _is_json(args.out):
        payload = {
            "sweep": [
                {"parameter": r[0], "fixed_points": r[1] if r[1] != "" else None,
                 "locations": r[2], "stabilities": r[3], "event": r[4]}
                for r in rows
            ],
            "transitions": [
                {"parameter": loc, "from": c1, "to": c2, "note": note}
                for loc, c1, c2, note in transitions
            ],
        }
        write_json(args.out, payload, meta)
    elif args.out:
        write_csv(args.out, header, out_rows, meta)
    return 0


# --------------------------------------------------------------- simulate


def _parse_boundary(text: str):
    if text == "uniform":
        return Uniform01()
    kind, sep, value = text.partition(":")
    if sep and kind in ("bernoulli", "bivariate"):
        try:
            x = float(value)
        except ValueError:
            raise DistributionFormatError(f"bad boundary level {value!r}") from None
        return Bernoulli(x) if kind == "bernoulli" else BivariateBernoulli(x)
    raise DistributionFormatError(
        f"unknown boundary {text!r}: use uniform, bernoulli:x, or bivariate:x"
    )


def cmd_simulate(args) -> int:
    dist = parse_distribution(args.dist)
    boundary = _parse_boundary(args.boundary)
    config = SimConfig(dist, depth=args.depth, boundary=boundary,
                       samples=args.samples, seed=args.seed,
                       node_budget=args.budget)
    result = run_samples(config)
    kept = len(result.values)
    if result.discarded > kept:
        raise BudgetExceededError(
            config.node_budget,
            f"{result.discarded} of {result.attempted} trees exceeded the "
            f"node budget of {config.node_budget}; only {kept} kept",
        )

    print(f"dist: {dist.spec_string()}")
    print(f"depth: {config.depth}  kept: {kept}  discarded: {result.discarded}")
    cdf = _analytic_cdf(dist, config.depth)
    meta = run_meta("simulate", dist, seed=config.seed, precision="double",
                    depth=config.depth, samples=config.samples,
                    boundary=args.boundary, budget=config.node_budget)
    comparison: list[dict] = []

    if isinstance(boundary, Uniform01):
        ecdf = EmpiricalCDF(result.values)
        print("analytic comparison at the root:")
        for x in COMPARISON_PROBES:
            emp = float(ecdf(x))
            ana = float(cdf(x))
            comparison.append({"x": x, "empirical": emp, "analytic": ana})
            print(f"  x={x:.1f}  empirical={emp!r}  analytic={ana!r}"
                  f"  diff={emp - ana!r}")
        if kept >= 100:
            d1 = ks_statistic(ecdf, cdf)
            thr = float(ks_threshold(kept))
            verdict = "pass" if d1 <= thr else "fail"
            meta["ks_statistic"] = repr(d1)
            meta["ks_threshold"] = repr(thr)
            if verdict == "fail":
                retry = run_samples(dataclasses.replace(config, seed=config.seed + 1))
                if len(retry.values) >= 100:
                    d2 = ks_statistic(EmpiricalCDF(retry.values), cdf)
                    verdict = "pass_on_retry" if d2 <= thr else "fail"
                    meta["ks_retry_statistic"] = repr(d2)
            meta["ks_verdict"] = verdict
            print(f"ks: statistic={d1!r}  threshold={thr!r}  verdict={verdict}")
    elif isinstance(boundary, Bernoulli):
        p_zero = float(np.mean(result.values == 0.0))
        ana = float(cdf(boundary.x))
        comparison.append({"x": boundary.x, "empirical": p_zero, "analytic": ana})
        print(f"P(root = 0): empirical={p_zero!r}  analytic={ana!r}")
    else:
        ana = 1.0 - float(cdf(boundary.x))
        for col in (0, 1):
            emp = float(np.mean(result.values[:, col]))
            comparison.append({"mark": col, "empirical": emp, "analytic": ana})
            print(f"P(mark {col} = 1): empirical={emp!r}  analytic={ana!r}")

    if args.out:
        if _is_json(args.out):
            payload = {"values": result.values.tolist(),
                       "discarded": result.discarded,
                       "comparison": comparison}
            write_json(args.out, payload, meta)
        elif isinstance(boundary, BivariateBernoulli):
            write_csv(args.out, ["value_0", "value_1"],
                      result.values.tolist(), meta)
        else:
            write_csv(args.out, ["value"],
                      ((v,) for v in result.values.tolist()), meta)
    return 0


# ---------------------------------------------------------------- scaling


def _case_for(fp: FixedPointRecord) -> str:
    if fp.stability is Stability.STABLE:
        raise ValueError(
            f"q={fp.q!r} is stable; rescaling applies to unstable fixed points"
        )
    if math.isinf(fp.xi):
        return "c"
    if fp.xi > 1.0 + 1e-9:
        return "a"
    return "b"


def _select_regime(records: list[FixedPointRecord],
                   at: float | None) -> tuple[FixedPointRecord, str]:
    if at is not None:
        fp = min(records, key=lambda r: abs(r.q - at))
        if abs(fp.q - at) > AT_TOLERANCE:
            raise ValueError(
                f"no fixed point within {AT_TOLERANCE} of {at}; "
                f"nearest is q={fp.q!r}"
            )
        return fp, _case_for(fp)
    unstable = [r for r in records if r.stability is not Stability.STABLE]
    if not unstable:
        raise ValueError("no unstable fixed point; nothing to rescale")
    infinite = [r for r in unstable if math.isinf(r.xi)]
    if infinite:
        return infinite[0], "c"
    best = max(unstable, key=lambda r: r.xi)
    if best.xi > 1.0 + 1e-9:
        return best, "a"
    return unstable[0], "b"


def cmd_scaling(args) -> int:
    dist = parse_distribution(args.dist)
    records = find_fixed_points(dist)
    fp, case = _select_regime(records, args.at)
    meta = run_meta("scaling", dist, precision=args.precision, case=case,
                    at=repr(fp.q), grid=args.grid, max_n=args.max_n)

    if case == "a":
        grid = default_case_a_grid(points_per_side=args.grid)
        regime = solve_case_a(dist, fp, grid=grid, max_n=args.max_n,
                              precision=args.precision)
        meta["xi"] = repr(regime.xi)
        meta["escalated"] = regime.escalated
        if _is_json(args.out):
            write_json(args.out, regime.as_dict(), meta)
        else:
            write_csv(args.out or sys.stdout, ["x", "F_V"],
                      zip(regime.grid, regime.F_V), meta)
        return 0

    regime = solve_case_b(dist, fp) if case == "b" else solve_case_c(dist)
    summary = regime.as_dict()
    if _is_json(args.out):
        write_json(args.out, summary, meta)
    else:
        write_csv(args.out or sys.stdout, list(summary), [summary.values()], meta)
    return 0


# --------------------------------------------------------------- endogeny


def cmd_endogeny(args) -> int:
    dist = parse_distribution(args.dist)
    report = decide_endogeny(dist, args.at)
    print(f"dist: {dist.spec_string()}")
    print(f"x={report.x!r}  f'(x)={report.f_prime!r}")
    print(f"verdict: {report.verdict}  b*={report.b_star!r}")

    mc_rows: list[dict] = []
    if args.samples > 0:
        x = report.x
        b = x * (1.0 - x)
        print("shared-tree disagreement check:")
        for n in range(1, args.depth + 1):
            b = h_map(dist, x, b)
            config = SimConfig(dist, depth=2 * n, boundary=BivariateBernoulli(x),
                               samples=args.samples, seed=args.seed + n)
            vals = run_samples(config).values
            if len(vals) == 0:
                raise BudgetExceededError(config.node_budget,
                                          "every sampled tree went over budget")
            p10 = float(np.mean((vals[:, 0] == 1.0) & (vals[:, 1] == 0.0)))
            se = math.sqrt(max(b * (1.0 - b), 1e-12) / len(vals))
            ok = abs(p10 - b) <= 3.0 * se
            mc_rows.append({"depth": 2 * n, "empirical": p10, "predicted": b,
                            "within_3se": ok})
            flag = "ok" if ok else "DRIFT"
            print(f"  depth {2 * n}: disagreement={p10!r}  "
                  f"predicted={b!r}  [{flag}]")

    if args.out:
        meta = run_meta("endogeny", dist, seed=args.seed, precision="double",
                        at=repr(args.at), samples=args.samples,
                        depth=args.depth)
        if _is_json(args.out):
            payload = report.as_dict()
            payload["mc"] = mc_rows
            write_json(args.out, payload, meta)
        else:
            cap = min(report.x, 1.0 - report.x)
            bs = np.linspace(0.0, cap, 201)
            gaps = [h_map(dist, report.x, float(b)) - float(b) for b in bs]
            write_csv(args.out, ["b", "h_minus_b"],
                      zip(bs.tolist(), gaps), meta)
    return 0


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwminimax",
        description="Minimax game values on Galton-Watson trees: fixed "
                    "points, limit laws, scaling regimes, and simulation.",
    )
    parser.add_argument("--version", action="version",
                        version=f"gwminimax {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def dist_arg(p):
        p.add_argument("--dist", required=True,
                       help="offspring law, e.g. regular:2, geometric:0.5, "
                            "finite:1=0.3,3=0.7, powerlaw:1.5")

    p = sub.add_parser("analyze", help="fixed points and the limit law")
    dist_arg(p)
    p.add_argument("--out", help="optional JSON artifact path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("curve", help="tabulate f(x) - x")
    dist_arg(p)
    p.add_argument("--grid", type=int, default=1000,
                   help="number of grid intervals on [0, 1]")
    p.add_argument("--out", help="artifact path (.csv default, .json)")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("scan", help="sweep a one-parameter family")
    p.add_argument("--family", required=True,
                   help="finite family template, e.g. finite:1=p,3=1-p")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out", help="artifact path (.csv default, .json)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="Monte Carlo root values")
    dist_arg(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--boundary", default="uniform",
                   help="uniform (default), bernoulli:x, or bivariate:x")
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET,
                   help="per-tree node budget")
    p.add_argument("--out", help="artifact path (.csv default, .json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scaling", help="rescaled limit around a fixed point")
    dist_arg(p)
    p.add_argument("--at", type=float, default=None,
                   help="fixed-point location; omitted picks the regime "
                        "automatically")
    p.add_argument("--grid", type=int, default=100,
                   help="expanding case: grid points per side")
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N, dest="max_n")
    p.add_argument("--precision", choices=("double", "extended"),
                   default="extended")
    p.add_argument("--out", help="artifact path (.csv default, .json)")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("endogeny", help="shared-tree disagreement test")
    dist_arg(p)
    p.add_argument("--at", type=float, required=True,
                   help="fixed point of the two-level map to test")
    p.add_argument("--samples", type=int, default=0,
                   help="per-depth Monte Carlo cross-check sample count")
    p.add_argument("--depth", type=int, default=3,
                   help="cross-check depths run over 2, 4, ..., 2*depth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="artifact path "
                                 "(.csv gives the b vs h(b) - b table, .json "
                                 "the full report)")
    p.set_defaults(func=cmd_endogeny)
    return parser


def _fail(code: int, exc: Exception) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        return _fail(5, exc)
    except UnresolvedTouchpointError as exc:
        return _fail(3, exc)
    except (NoConvergenceError, AssumptionViolatedError, PrecisionLossError,
            DerivativeOrderNotFoundError, InsufficientConditionedSamplesError,
            IdentityMapError) as exc:
        return _fail(4, exc)
    except (DistributionFormatError, DomainError, NotAFixedPointError,
            ValueError) as exc:
        return _fail(2, exc)


if __name__ == "__main__":
    sys.exit(main())
