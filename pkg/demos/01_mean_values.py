"""Mean values of the micro functions the model is built from.

A micro function w(y) enters the equations through its rescaled trace
w(x/eps). What survives as eps -> 0 is its mean value

    M(w) = lim_{R -> inf} (1 / |B_R|) int_{B_R} w(y) dy,

which exists for periodic, quasi-periodic and "limit at infinity" functions
alike. This script computes it three ways for each kind: the closed form,
averages over growing balls, and the weak limit of w(x/eps) against a bump.
"""
import numpy as np

from nfhomog import (LimitAtInfinity, MacroGrid, Profile, TrigPoly, ball_average, integrate, mean_value,
                     sample_trace)

periodic = TrigPoly.from_terms([((0,), 1.0, 0.0), ((1,), 0.5, 0.0), ((3,), 0.25, 0.3)])
quasi = TrigPoly.from_terms([((0, 0), 0.7, 0.0), ((1, 0), 1.0, 0.0), ((1, -1), 0.5, 0.0)],
                            generators=((1.0,), (np.sqrt(2.0),)))
bump = LimitAtInfinity(Profile("bump", 2.0, amplitude=3.0), limit_value=0.4)

print("mean values: closed form, then ball averages at R = 10, 100, 1000")
for name, w in [("periodic", periodic), ("quasi-periodic", quasi), ("limit at infinity", bump)]:
    avgs = [ball_average(w, R) for R in (10.5, 100.5, 1000.5)]
    print(f"  {name:18s} M = {mean_value(w):.6f}   " + "  ".join(f"{a:.6f}" for a in avgs))

# weak limit: int phi(x) w(x/eps) dx -> M(w) int phi(x) dx. For the periodic
# w the excess is a Fourier coefficient of phi at 2 pi / eps, already below
# roundoff; the bump of the limit-at-infinity w adds about eps * 3 * 2 * phi(0),
# so that ratio approaches 1 only linearly in eps.
grid = MacroGrid(1, 8.0, 8192)
phi = Profile("gaussian", 0.6, center=(0.3,))
mass = integrate(grid.sample(phi))
print("\nweak limits  int phi(x) w(x/eps) dx / (M(w) int phi)  for eps = 1/2 ... 1/32")
for name, w in [("periodic", periodic), ("limit at infinity", bump)]:
    ratios = [integrate(sample_trace(phi, w, e, grid)) / (mean_value(w) * mass)
              for e in (0.5, 0.25, 0.125, 0.0625, 0.03125)]
    print(f"  {name:18s} " + "  ".join(f"{r:.6f}" for r in ratios))
