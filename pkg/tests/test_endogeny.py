"""Endogeny decisions and the bivariate disagreement map.

For the 2-regular law the complement map is R(t) = 1 - t^2 and the
golden-ratio fixed point q satisfies q^2 = 1 - q, which makes the
disagreement recursion solvable by hand: the positive fixed point of h
is b* = 2q - 1 = sqrt(5) - 2, reached exactly because

    h(2q - 1) = 1 - (2q - 1 + q^4)^2 ... = 2q - 1

collapses through the golden identity. Tests pin b* to that closed
form and cross-check h itself against the polynomial composition.
"""

import math

import numpy as np
import pytest
from scipy import optimize

from gwminimax import (
    DomainError,
    FiniteSupport,
    Geometric,
    NotAFixedPointError,
    Regular,
)
from gwminimax.endogeny import (
    ENDOGENOUS,
    NON_ENDOGENOUS,
    EndogenyReport,
    decide_endogeny,
    h_map,
)
from gwminimax.fixedpoints import find_fixed_points
from gwminimax.simulate import BivariateBernoulli, SimConfig, run_samples

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def interior(dist):
    return [r for r in find_fixed_points(dist) if 0.0 < r.q < 1.0][0]


class TestHMap:
    def test_zero_is_fixed(self):
        cases = [
            (Regular(2), GOLDEN),
            (Geometric(0.5), 0.37),
            (FiniteSupport.from_masses({1: 0.7, 3: 0.3}), interior(
                FiniteSupport.from_masses({1: 0.7, 3: 0.3})).q),
        ]
        for dist, x in cases:
            assert abs(h_map(dist, x, 0.0)) <= 1e-12

    def test_slope_at_zero_is_f_prime(self):
        for dist, x in [(Regular(2), GOLDEN), (Regular(3), interior(Regular(3)).q)]:
            eps = 1e-6
            fd = (4.0 * h_map(dist, x, eps) - h_map(dist, x, 2.0 * eps)) / (2.0 * eps)
            assert abs(fd - dist.two_level_jet(x, 1).derivative(1)) < 1e-6

    def test_matches_closed_form_for_regular_two(self):
        d = Regular(2)
        q = GOLDEN
        R = lambda t: 1.0 - t * t
        for b in np.linspace(0.0, 1.0 - q, 23):
            closed = R(2.0 * R(q) - R(q - b)) - R(R(q))
            assert h_map(d, q, float(b)) == pytest.approx(closed, abs=1e-12)

    def test_increasing_and_strictly_concave(self):
        d = Regular(2)
        bs = np.linspace(0.0, 1.0 - GOLDEN, 50)
        hs = np.array([h_map(d, GOLDEN, float(b)) for b in bs])
        assert np.all(np.diff(hs) > 0.0)
        assert np.all(np.diff(hs, 2) < 0.0)

    def test_domain_guards(self):
        d = Regular(2)
        with pytest.raises(DomainError):
            h_map(d, GOLDEN, -0.01)
        with pytest.raises(DomainError):
            h_map(d, GOLDEN, min(GOLDEN, 1.0 - GOLDEN) + 0.01)
        with pytest.raises(NotAFixedPointError):
            h_map(d, 0.3, 0.0)

    def test_dichotomy_against_the_slope(self):
        # contracting slope pushes every b down, expanding slope lifts
        # small b up
        stable = FiniteSupport.from_masses({1: 0.7, 3: 0.3})
        xs = interior(stable).q
        cap = min(xs, 1.0 - xs)
        for b in np.linspace(cap * 1e-3, cap, 20):
            assert h_map(stable, xs, float(b)) <= b + 1e-12
        eps = 1e-4 * (1.0 - GOLDEN)
        assert h_map(Regular(2), GOLDEN, eps) > eps


class TestDecide:
    def test_regular_two_golden_point(self):
        rep = decide_endogeny(Regular(2), GOLDEN)
        assert rep.verdict == NON_ENDOGENOUS
        assert rep.f_prime == pytest.approx(4.0 * (1.0 - GOLDEN), abs=1e-9)
        assert rep.b_star == pytest.approx(math.sqrt(5.0) - 2.0, abs=1e-9)
        assert 0.0 < rep.b_star <= min(GOLDEN, 1.0 - GOLDEN)
        # trace is the monotone climb the construction promises
        values = [b for _, b in rep.iterates]
        assert all(b2 >= b1 for b1, b2 in zip(values, values[1:]))
        assert rep.iterates[0][0] == 0

    def test_matches_independent_bisection(self):
        d = Regular(2)
        rep = decide_endogeny(d, GOLDEN)
        root = optimize.brentq(
            lambda t: h_map(d, GOLDEN, t) - t, 1e-6, 1.0 - GOLDEN, xtol=1e-14
        )
        assert rep.b_star == pytest.approx(root, abs=1e-9)

    def test_identity_family_is_endogenous_everywhere(self):
        g = Geometric(0.5)
        for x in (0.1, 0.37, 0.5, 0.9):
            rep = decide_endogeny(g, x)
            assert rep.verdict == ENDOGENOUS
            assert rep.b_star == 0.0
            assert rep.f_prime == pytest.approx(1.0, abs=1e-9)

    def test_stable_interior_point_is_endogenous(self):
        d = FiniteSupport.from_masses({1: 0.7, 3: 0.3})
        rep = decide_endogeny(d, interior(d).q)
        assert rep.verdict == ENDOGENOUS
        assert rep.f_prime < 1.0
        assert rep.b_star == 0.0 and rep.iterates == ()

    def test_endpoints_trivially_endogenous(self):
        rep = decide_endogeny(Regular(2), 0.0)
        assert rep.verdict == ENDOGENOUS
        assert rep.b_star == 0.0 and rep.iterates == ()
        assert decide_endogeny(Regular(2), 1.0).verdict == ENDOGENOUS

    def test_rejects_non_fixed_points(self):
        with pytest.raises(NotAFixedPointError):
            decide_endogeny(Regular(2), 0.3)
        with pytest.raises(DomainError):
            decide_endogeny(Regular(2), 1.5)

    def test_report_round_trip(self):
        rep = decide_endogeny(Regular(2), GOLDEN)
        blob = rep.as_dict()
        assert blob["verdict"] == NON_ENDOGENOUS
        assert blob["b_star"] == rep.b_star
        assert blob["iterates"][0] == [0, rep.iterates[0][1]]
        assert isinstance(rep, EndogenyReport)


class TestBivariateAgreement:
    def test_disagreement_tracks_h_iterates(self):
        # stable point: h^n(x(1-x)) decays, and the shared-tree Monte
        # Carlo must follow it depth for depth
        d = FiniteSupport.from_masses({1: 0.45, 3: 0.55})
        x = interior(d).q
        b = x * (1.0 - x)
        for n in (1, 2, 3):
            b = h_map(d, x, b)
            cfg = SimConfig(d, depth=2 * n, boundary=BivariateBernoulli(x),
                            samples=4000, seed=60 + n)
            vals = run_samples(cfg).values
            p10 = float(np.mean((vals[:, 0] == 1.0) & (vals[:, 1] == 0.0)))
            p01 = float(np.mean((vals[:, 0] == 0.0) & (vals[:, 1] == 1.0)))
            se = math.sqrt(max(b * (1.0 - b), 1e-12) / 4000)
            assert abs(p10 - b) <= 3.0 * se
            assert abs(p01 - b) <= 3.0 * se

    def test_stationary_disagreement_at_golden_point(self):
        # for Regular(2) the seed x(1-x) already sits at b*, so the
        # disagreement level is flat in depth
        d = Regular(2)
        b_star = math.sqrt(5.0) - 2.0
        assert h_map(d, GOLDEN, GOLDEN * (1.0 - GOLDEN)) == pytest.approx(
            b_star, abs=1e-12
        )
        cfg = SimConfig(d, depth=6, boundary=BivariateBernoulli(GOLDEN),
                        samples=4000, seed=77)
        vals = run_samples(cfg).values
        p10 = float(np.mean((vals[:, 0] == 1.0) & (vals[:, 1] == 0.0)))
        se = math.sqrt(b_star * (1.0 - b_star) / 4000)
        assert abs(p10 - b_star) <= 3.0 * se

    def test_marginals_preserved_at_fixed_point(self):
        d = FiniteSupport.from_masses({1: 0.45, 3: 0.55})
        x = interior(d).q
        cfg = SimConfig(d, depth=4, boundary=BivariateBernoulli(x),
                        samples=4000, seed=91)
        vals = run_samples(cfg).values
        se = math.sqrt(x * (1.0 - x) / 4000)
        for col in (0, 1):
            assert abs(float(np.mean(vals[:, col])) - (1.0 - x)) <= 3.0 * se
