"""Walk the fixed-point structure of a few offspring laws.

Run as:  python3 demos/fixed_point_tour.py
"""

import numpy as np

from gwminimax.distributions import FiniteSupport, Geometric, Regular
from gwminimax.fixedpoints import find_fixed_points, limit_law
from gwminimax.errors import IdentityMapError


def describe(dist):
    print(f"\n== {dist.spec_string()} ==")
    try:
        records = find_fixed_points(dist)
    except IdentityMapError:
        print("the two-level map is the identity: every boundary law is a "
              "fixed point and the root value stays uniform at any depth")
        return
    for r in records:
        print(f"  q = {r.q:.12f}   f'(q) = {r.xi:<10.6g} {r.stability.value}")
    law = limit_law(dist)
    for q, mass in law.atoms:
        print(f"  limit atom at {q:.12f} with mass {mass:.12f}")


def convergence_table(dist, x0=0.25, steps=6):
    # the CDF of the depth-2n root value is the n-fold iterate, so the
    # iterates themselves show how fast the limit law takes over
    print(f"\niterates of f from x0 = {x0} for {dist.spec_string()}:")
    x = np.float64(x0)
    for n in range(steps + 1):
        print(f"  n = {n}: {x:.15f}")
        x = dist.two_level_map(x)


if __name__ == "__main__":
    describe(Regular(2))
    describe(FiniteSupport.from_masses({1: 0.45, 3: 0.55}))
    describe(FiniteSupport.from_masses({1: 0.7, 3: 0.3}))
    describe(Geometric(0.5))
    convergence_table(Regular(2))
