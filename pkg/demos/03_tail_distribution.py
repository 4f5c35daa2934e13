"""Distribution of the condition number of random decompositions.

Samples kappa for seven random terms in a 7x7xn space, prints a few ccdf
values and fits the tail model a*x^-b to P[kappa^(n-1) > x].

Usage: python3 demos/03_tail_distribution.py [n] [count]
"""

import sys
import time

import numpy as np

from cpdlab import SampleSpec, estimate_ccdf, fit_tail, quantile, sample_condition_numbers
from cpdlab.experiments import available_threads

n = int(sys.argv[1]) if len(sys.argv) > 1 else 2
count = int(sys.argv[2]) if len(sys.argv) > 2 else 20_000

spec = SampleSpec((7, 7, n), r=7, seed=42, count=count)
start = time.perf_counter()
kappa = sample_condition_numbers(spec, threads=available_threads())
print(f"{count} samples of format 7x7x{n}, r=7 in {time.perf_counter() - start:.1f} s")
print(f"min kappa {kappa.min():.3f}, median {np.median(kappa):.1f}, infinite {np.isinf(kappa).sum()}")

table = estimate_ccdf(kappa, power=1)
for x in (1e2, 1e3, 1e4, 1e5):
    print(f"P[kappa > {x:.0e}] = {table.ccdf_at(x):.4f}")
for p in (0.1, 0.01):
    print(f"{p:.0%} of samples exceed {quantile(table, p):.4g}")

fit = fit_tail(estimate_ccdf(kappa, power=max(n - 1, 1)))
print(f"tail of kappa^{max(n - 1, 1)}: a = {fit.a:.4g}, b = {fit.b:.4f} +- {fit.b_stderr:.4f}, "
      f"R^2 = {fit.r_squared:.4f} on {fit.n_points} points")
