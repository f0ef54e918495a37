"""The three fluctuation regimes around a fixed point, side by side.

An expanding multiplier gives an exponential rescaled limit, a tangent
one gives a polynomial escape threshold, and an infinite one (heavy
tails) gives a double-exponential law. One canonical offspring law per
regime:

    python3 demos/scaling_regimes.py
"""

import numpy as np

from gwminimax.distributions import FiniteSupport, PowerLaw, Regular
from gwminimax.fixedpoints import find_fixed_points
from gwminimax.scaling import solve_case_a, solve_case_b, solve_case_c


def expanding():
    d = Regular(2)
    fp = next(r for r in find_fixed_points(d) if 0.0 < r.q < 1.0)
    grid = np.array([-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0])
    regime = solve_case_a(d, fp, grid=grid)
    print(f"expanding: {d.spec_string()}  xi = {regime.xi:.6f}")
    print("  slice of the rescaled CDF F_V:")
    for x, v in zip(regime.grid, regime.F_V):
        print(f"    F_V({x:+5.1f}) = {v:.12f}")


def tangent():
    d = FiniteSupport.from_masses({1: 0.5, 2: 0.25, 4: 0.25})
    fp = find_fixed_points(d)[0]
    regime = solve_case_b(d, fp)
    print(f"\ntangent: {d.spec_string()}  at q = {fp.q}")
    print(f"  contact order k = {regime.k}")
    print(f"  escape threshold a = {regime.a:.12f} "
          f"(start q + x/n^(1/(k-1)) escapes iff |x| > a)")
    print(f"  atom masses: above {regime.mass_plus}, below {regime.mass_minus}")


def heavy_tail():
    d = PowerLaw(1.5)
    regime = solve_case_c(d)
    print(f"\nheavy tail: {d.spec_string()}")
    print(f"  partial-sum growth exponent rho = {regime.rho:.6f}")
    print(f"  near-endpoint map exponent K(1-rho) = {regime.exponent:.6f}")
    print(f"  constants: C0 = {regime.C0:.6f}, C1 = {regime.C1:.6f}")


if __name__ == "__main__":
    expanding()
    tangent()
    heavy_tail()
