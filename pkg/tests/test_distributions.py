"""Distribution kinds against independent oracles.

Oracles used here:

* geometric pgf values against a direct 60-term series sum,
* the deterministic-binching closed form R(R(x)) = 2x^2 - x^4 for two
  children, derived by expanding (1 - (1 - x^2)^2) by hand,
* power-law pgf and complement against mpmath's polylog at 40 digits,
* involution-family mass tables against mpmath Taylor coefficients of the
  closed-form generating functions,
* derivative jets against central finite differences.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwminimax import (
    DistributionFormatError,
    DomainError,
    FiniteSupport,
    Geometric,
    InfiniteDerivativeError,
    InvolutionB,
    InvolutionC,
    PowerLaw,
    Regular,
    distribution_from_dict,
    parse_distribution,
)

ALL_KINDS = [
    FiniteSupport.from_masses({1: 0.45, 3: 0.55}),
    FiniteSupport.from_masses({1: 0.5, 2: 0.25, 4: 0.25}),
    Regular(2),
    Regular(3),
    Geometric(0.5),
    Geometric(0.25),
    InvolutionB(2),
    InvolutionB(3),
    InvolutionC(2),
    InvolutionC(3),
    PowerLaw(1.5),
]

IDENTITY_KINDS = [Geometric(0.5), Geometric(0.3), InvolutionB(2), InvolutionB(3),
                  InvolutionC(2), InvolutionC(4)]


def corner_heavy_grid():
    return np.concatenate(
        [np.logspace(-14, -0.01, 150), 1.0 - np.logspace(-14, -0.01, 150),
         np.linspace(0.0, 1.0, 101)]
    )


# ---------------------------------------------------------------------------
# basic map properties


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_pgf_endpoints_and_monotonicity(dist):
    x = np.linspace(0.0, 1.0, 201)
    g = dist.pgf(x)
    assert g[0] == 0.0
    assert g[-1] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(g) >= 0)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_level_map_is_decreasing_complement(dist):
    x = np.linspace(0.0, 1.0, 201)
    r = dist.level_map(x)
    np.testing.assert_allclose(r, 1.0 - dist.pgf(x), atol=1e-15)
    assert np.all(np.diff(r) <= 0)
    assert r[0] == 1.0 and abs(r[-1]) < 1e-15


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_two_level_map_fixes_corners_and_increases(dist):
    x = corner_heavy_grid()
    f = dist.two_level_map(np.sort(x))
    assert np.all(np.diff(f) >= -1e-15)
    assert dist.two_level_map(0.0) == 0.0
    assert dist.two_level_map(1.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_two_level_complement_is_exact_complement(dist):
    x = np.linspace(0.0, 1.0, 101)
    total = dist.two_level_map(x) + dist.two_level_complement(x)
    np.testing.assert_allclose(total, 1.0, atol=2e-15)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_scalar_and_array_paths_agree(dist):
    xs = [0.0, 1e-12, 0.25, 0.5, 1.0 - 1e-12, 1.0]
    batch = dist.two_level_map(np.array(xs))
    singles = [dist.two_level_map(x) for x in xs]
    np.testing.assert_array_equal(batch, singles)


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_domain_validation(dist):
    with pytest.raises(DomainError):
        dist.pgf(1.001)
    with pytest.raises(DomainError):
        dist.two_level_map(np.array([0.5, -0.1]))
    # rounding slack is absorbed silently
    assert dist.pgf(-1e-13) == 0.0


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_pgf_inverse_round_trip(dist):
    x = np.linspace(0.01, 0.99, 67)
    np.testing.assert_allclose(dist.pgf_inverse(dist.pgf(x)), x, atol=5e-11)
    assert dist.pgf_inverse(0.0) == 0.0
    assert dist.pgf_inverse(1.0) == 1.0


# ---------------------------------------------------------------------------
# identity families


@pytest.mark.parametrize("dist", IDENTITY_KINDS, ids=str)
def test_involution_families_compose_to_identity(dist):
    x = corner_heavy_grid()
    assert np.max(np.abs(dist.two_level_map(x) - x)) < 5e-15


@pytest.mark.parametrize("dist", IDENTITY_KINDS, ids=str)
def test_identity_holds_in_relative_terms_near_zero(dist):
    x = np.logspace(-14, -2, 60)
    rel = np.abs(dist.two_level_map(x) / x - 1.0)
    assert np.max(rel) < 1e-13


# ---------------------------------------------------------------------------
# frozen values from independent oracles


def test_geometric_pgf_against_series_sum():
    # direct series: sum of p (1-p)^(k-1) x^k, enough terms to exhaust double
    for p, x in [(0.5, 0.5), (0.25, 0.8), (0.7, 0.3)]:
        oracle = sum(p * (1 - p) ** (k - 1) * x ** k for k in range(1, 201))
        assert Geometric(p).pgf(x) == pytest.approx(oracle, abs=1e-14)
    # the special point used throughout: G(1/2) = 1/3 at p = 1/2
    assert Geometric(0.5).pgf(0.5) == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_two_children_closed_form():
    # R(x) = 1 - x^2, so R(R(x)) = 1 - (1 - x^2)^2 = 2x^2 - x^4
    d = Regular(2)
    x = np.linspace(0.0, 1.0, 201)
    np.testing.assert_allclose(d.two_level_map(x), 2 * x**2 - x**4, atol=5e-15)
    assert d.two_level_map(0.5) == pytest.approx(0.4375, abs=1e-15)


def test_powerlaw_pgf_against_polylog():
    pl = PowerLaw(1.5)
    with mpmath.workdps(40):
        zeta = mpmath.zeta(1.5)
        for x in [0.01, 0.3, 0.59, 0.6, 0.61, 0.8, 0.99, 0.999999]:
            exact = float(mpmath.polylog(1.5, x) / zeta)
            assert pl.pgf(x) == pytest.approx(exact, rel=5e-15)


def test_powerlaw_complement_against_polylog():
    pl = PowerLaw(1.5)
    with mpmath.workdps(60):
        zeta = mpmath.zeta(1.5)
        for u in [1e-16, 1e-12, 1e-8, 1e-4, 0.1, 0.3999]:
            exact = float(1 - mpmath.polylog(1.5, 1 - mpmath.mpf(u)) / zeta)
            got = pl._r1m_arr(np.array([u]))[0]
            assert got == pytest.approx(exact, rel=5e-15)


def test_powerlaw_masses_and_mean():
    pl = PowerLaw(1.5)
    with mpmath.workdps(30):
        p1 = float(1 / mpmath.zeta(1.5))
    assert pl.mass(1) == pytest.approx(p1, rel=1e-15)
    assert pl.mass(1) == pytest.approx(0.3827933839994266, abs=1e-15)
    assert pl.mass(8) == pytest.approx(p1 / 8**1.5, rel=1e-14)
    assert math.isinf(pl.mean())
    assert pl.min_support() == 1


def test_involution_b_mass_table():
    # expanding (1 - sqrt(1-x))^2 = x - 2(1 - sqrt(1-x) - x/2) gives
    # p_2 = 1/4, p_3 = 1/8, p_4 = 5/64 ... ; cross-check with mpmath taylor
    b2 = InvolutionB(2)
    assert b2.mass(1) == 0.0
    assert b2.mass(2) == pytest.approx(0.25, abs=1e-15)
    assert b2.mass(3) == pytest.approx(0.125, abs=1e-15)
    assert b2.mass(4) == pytest.approx(5.0 / 64.0, abs=1e-15)
    with mpmath.workdps(30):
        coeffs = mpmath.taylor(lambda t: (1 - (1 - t) ** mpmath.mpf("0.5")) ** 2, 0, 12)
    for k in range(1, 13):
        assert b2.mass(k) == pytest.approx(float(coeffs[k]), abs=1e-14)
    assert b2.min_support() == 2
    assert math.isinf(b2.mean())


def test_involution_c_mass_table():
    c2 = InvolutionC(2)
    assert c2.mass(2) == pytest.approx(0.5, abs=1e-15)
    assert c2.mass(3) == 0.0
    assert c2.mass(4) == pytest.approx(0.125, abs=1e-15)
    assert c2.mass(6) == pytest.approx(1.0 / 16.0, abs=1e-15)
    with mpmath.workdps(30):
        coeffs = mpmath.taylor(
            lambda t: 1 - (1 - t**2) ** mpmath.mpf("0.5"), 0, 12
        )
    for k in range(1, 13):
        assert c2.mass(k) == pytest.approx(float(coeffs[k]), abs=1e-14)


def test_degenerate_involutions_are_single_child():
    for d in (InvolutionB(1), InvolutionC(1)):
        assert d.mass(1) == pytest.approx(1.0)
        assert d.mean() == 1.0
        x = np.linspace(0, 1, 11)
        np.testing.assert_allclose(d.pgf(x), x, atol=1e-15)


def test_mass_tables_sum_toward_one():
    # heavy-tail samplers know how much mass the truncation discarded
    for d in (InvolutionB(3), InvolutionC(2), PowerLaw(1.5)):
        coarse = d.offspring_sampler(cap=2000)
        fine = d.offspring_sampler(cap=200000)
        assert 0.0 < fine.tail_mass < coarse.tail_mass < 0.2
    # finite kinds carry no tail
    assert FiniteSupport.from_masses({2: 1.0}).offspring_sampler().tail_mass == 0.0
    assert Geometric(0.5).offspring_sampler().tail_mass == 0.0


# ---------------------------------------------------------------------------
# derivatives


@pytest.mark.parametrize("dist", ALL_KINDS, ids=str)
def test_two_level_jet_matches_finite_differences(dist):
    x0 = 0.37
    jet = dist.two_level_jet(x0, 2)
    h = 1e-5
    fm, f0, fp = (dist.two_level_map(x0 + s) for s in (-h, 0.0, h))
    assert jet.value == pytest.approx(f0, abs=1e-14)
    assert jet.derivative(1) == pytest.approx((fp - fm) / (2 * h), abs=1e-6)
    assert jet.derivative(2) == pytest.approx((fp - 2 * f0 + fm) / h**2, abs=1e-4)


@pytest.mark.parametrize(
    "dist",
    [d for d in ALL_KINDS if math.isfinite(d.mean())],
    ids=str,
)
def test_endpoint_slope_is_p1_times_mean(dist):
    expected = dist.p1 * dist.mean()
    assert dist.two_level_jet(0.0, 1).derivative(1) == pytest.approx(expected, abs=1e-12)
    assert dist.two_level_jet(1.0, 1).derivative(1) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("dist", [PowerLaw(1.5), InvolutionB(2), InvolutionC(3)], ids=str)
def test_infinite_mean_endpoint_jets_raise(dist):
    with pytest.raises(InfiniteDerivativeError):
        dist.two_level_jet(0.0, 2)
    with pytest.raises(InfiniteDerivativeError):
        dist.two_level_jet(1.0, 2)


def test_geometric_pgf_jet_closed_form():
    # G^(j)(x) = p (1-p)^(j-1) j! / (1 - (1-p)x)^(j+1)
    p, x0 = 0.4, 0.3
    jet = Geometric(p).pgf_jet(x0, 4)
    q = 1 - p
    for j in range(1, 5):
        expected = p * q ** (j - 1) * math.factorial(j) / (1 - q * x0) ** (j + 1)
        assert jet.derivative(j) == pytest.approx(expected, rel=1e-13)


def test_powerlaw_jet_against_polylog_derivative():
    # G'(x) = Li_{a-1}(x) / (x zeta(a))
    pl = PowerLaw(1.5)
    x0 = 0.45
    with mpmath.workdps(40):
        expected = float(mpmath.polylog(0.5, x0) / (x0 * mpmath.zeta(1.5)))
    assert pl.pgf_jet(x0, 1).derivative(1) == pytest.approx(expected, rel=1e-12)


@given(
    st.dictionaries(
        st.integers(min_value=1, max_value=8),
        st.floats(min_value=0.05, max_value=1.0),
        min_size=1,
        max_size=5,
    )
)
@settings(max_examples=40, deadline=None)
def test_random_finite_laws_slope_identity(raw):
    total = sum(raw.values())
    masses = {k: v / total for k, v in raw.items()}
    # repair rounding so the table validates
    k0 = next(iter(masses))
    masses[k0] += 1.0 - sum(masses.values())
    d = FiniteSupport.from_masses(masses)
    slope = d.two_level_jet(0.0, 1).derivative(1)
    assert slope == pytest.approx(d.p1 * d.mean(), abs=1e-11)


# ---------------------------------------------------------------------------
# extended precision

def test_extended_precision_matches_double():
    import gmpy2

    gmpy2.get_context().precision = 192
    for d in [Geometric(0.5), Regular(2), FiniteSupport.from_masses({1: 0.45, 3: 0.55})]:
        x = gmpy2.mpfr("0.37")
        assert abs(float(d.mp_two_level_map(x)) - d.two_level_map(0.37)) < 1e-14


def test_extended_precision_involution_identity():
    import gmpy2

    gmpy2.get_context().precision = 192
    d = InvolutionB(2)
    x = gmpy2.mpfr("0.37")
    assert abs(d.mp_two_level_map(x) - x) < gmpy2.mpfr(2) ** -180


def test_powerlaw_has_no_extended_precision_path():
    import gmpy2

    with pytest.raises(NotImplementedError):
        PowerLaw(1.5).mp_two_level_map(gmpy2.mpfr("0.5"))


# ---------------------------------------------------------------------------
# samplers


def test_table_sampler_inverts_cdf():
    d = FiniteSupport.from_masses({1: 0.45, 3: 0.55})
    s = d.offspring_sampler()
    u = np.array([0.0, 0.2, 0.449, 0.451, 0.9, 1.0 - 1e-16])
    np.testing.assert_array_equal(s.draw(u), [1, 1, 1, 3, 3, 3])


def test_geometric_sampler_inverts_cdf():
    s = Geometric(0.5).offspring_sampler()
    # P(K=1) = 1/2, P(K<=2) = 3/4
    u = np.array([0.0, 0.49, 0.51, 0.74, 0.76, 1.0 - 1e-12])
    draws = s.draw(u)
    assert list(draws[:4]) == [1, 1, 2, 2]
    assert draws[4] == 3
    assert draws[5] > 30


def test_heavy_tail_sampler_matches_masses():
    d = PowerLaw(1.5, truncation=1000)
    s = d.offspring_sampler()
    assert s.truncated_at == 1000
    # the renormalized first mass exceeds the untruncated one
    u = np.linspace(1e-9, 1 - 1e-9, 100001)
    draws = s.draw(u)
    frac1 = np.mean(draws == 1)
    ks, probs = d.tabulated_masses()
    assert frac1 == pytest.approx(probs[0], abs=1e-3)


# ---------------------------------------------------------------------------
# parsing


def test_parse_round_trips():
    specs = [
        "finite:1=0.45,3=0.55",
        "regular:2",
        "geometric:0.5",
        "powerlaw:1.5",
        "powerlaw:1.5,200000",
        "invb:3",
        "invc:2",
    ]
    for s in specs:
        d = parse_distribution(s)
        assert distribution_from_dict(d.spec_dict()) == d
        assert parse_distribution(d.spec_string()) == d


def test_parse_inline_json():
    d = parse_distribution('{"kind": "geometric", "p": 0.25}')
    assert d == Geometric(0.25)
    d = parse_distribution('{"kind": "finite", "masses": {"1": 0.5, "2": 0.5}}')
    assert d == FiniteSupport.from_masses({1: 0.5, 2: 0.5})


@pytest.mark.parametrize(
    "bad",
    [
        "",
        "finite:",
        "finite:0=1.0",
        "finite:1=0.5,2=0.6",
        "finite:1=0.5,1=0.5",
        "finite:1=-0.5,2=1.5",
        "powerlaw:2.5",
        "powerlaw:0.9",
        "powerlaw:1.5,50",
        "geometric:0",
        "geometric:1.2",
        "regular:0",
        "regular:2.5",
        "invb:0",
        "nope:1",
        "regular",
        '{"kind": "mystery"}',
        '{"kind": "finite", "masses": {}}',
        "{not json",
    ],
)
def test_parse_rejects_malformed_specs(bad):
    with pytest.raises(DistributionFormatError):
        parse_distribution(bad)


def test_zero_masses_are_dropped_but_support_is_validated():
    d = FiniteSupport.from_masses({1: 0.5, 2: 0.0, 3: 0.5})
    assert d.mass(2) == 0.0
    assert d.min_support() == 1
    assert len(d.table) == 2
