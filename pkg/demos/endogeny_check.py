"""Does the tree alone decide the game, or do the leaf values matter?

Two copies of the game are coupled on one shared tree with independent
boundary marks. If the disagreement probability dies out with depth the
root value is a function of the tree (endogenous); if it stabilizes at a
positive level b*, the boundary noise never washes out.

    python3 demos/endogeny_check.py
"""

import math

import numpy as np

from gwminimax.distributions import Geometric, Regular
from gwminimax.endogeny import decide_endogeny, h_map
from gwminimax.simulate import BivariateBernoulli, SimConfig, run_samples

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def verdict_line(dist, x):
    report = decide_endogeny(dist, x)
    print(f"{dist.spec_string()} at x = {x:.6f}: {report.verdict} "
          f"(f'(x) = {report.f_prime:.6f}, b* = {report.b_star:.6f})")
    return report


def monte_carlo_track(dist, x, depths=(2, 4, 6), samples=20000):
    print("  depth | disagreement (MC) | h-iterate prediction")
    b = x * (1.0 - x)
    for n, depth in enumerate((d for d in depths), start=1):
        b = h_map(dist, x, b)
        config = SimConfig(dist, depth=depth, boundary=BivariateBernoulli(x),
                           samples=samples, seed=40 + n)
        vals = run_samples(config).values
        p10 = float(np.mean((vals[:, 0] == 1.0) & (vals[:, 1] == 0.0)))
        print(f"  {depth:5d} | {p10:17.5f} | {b:.5f}")


if __name__ == "__main__":
    report = verdict_line(Regular(2), GOLDEN)
    print(f"  closed form for this law: b* = sqrt(5) - 2 "
          f"= {math.sqrt(5.0) - 2.0:.12f}")
    monte_carlo_track(Regular(2), GOLDEN)
    print()
    verdict_line(Geometric(0.5), 0.5)
