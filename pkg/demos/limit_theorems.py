"""Monte Carlo look at the CLT, the Marcinkiewicz LLN and the bounded LIL.

Model: X_j = e_j + 0.5 e_{j-1} with standard gaussian e, variance kernel
h(x, y) = (x - y)^2 / 2. The Wick formula gives sigma^2 = 1.03125.

Run: python demos/limit_theorems.py
"""
import numpy as np
from scipy import stats

from bershift import (InnovationSpec, ShiftFunctional, ShiftProcess, clt_experiment, lil_statistic,
                      lln_experiment, sigma_squared, variance_kernel)

proc = ShiftProcess(InnovationSpec.gaussian(), ShiftFunctional.linear({0: 1.0, 1: 0.5}))
kernel = variance_kernel()

s = sigma_squared(kernel, proc, 6, 1_000_000, stream=1)
print(f"sigma^2 from a path of 1e6: {s.sigma2:.4f} (SE {s.se:.4f}), exact 1.03125")

clt = clt_experiment(kernel, proc, 1000, 500, 6, stream=2, sigma=s)
z = clt.statistics[:, 1]
print(f"CLT n=1000 R=500: variance {z.var(ddof=1):.4f}, KS distance {clt.summary['ks_distance']:.4f}")
print("  quantiles vs normal:")
for q, emp in zip((0.05, 0.25, 0.5, 0.75, 0.95), np.quantile(z, (0.05, 0.25, 0.5, 0.75, 0.95))):
    print(f"    {q:.2f}: {emp:+.3f}  normal {stats.norm.ppf(q, scale=np.sqrt(s.sigma2)):+.3f}")

lln = lln_experiment(kernel, proc, 1.5, 4000, [250, 500, 1000, 2000], R=50, stream=3)
# the statistic is n^{-(1 + 1/p)} |U_n - E U_n|, which shrinks like n^{1/2 - 1/p}
print("LLN p=1.5, median tail maxima T(N):")
for c in (250, 500, 1000, 2000):
    print(f"    N={c:5d}: {lln.summary[f'median_T_{c}']:.4f}")

lil = lil_statistic(kernel, proc, 4000, R=100, stream=4)
print(f"LIL sup statistic, q99 ratio S(4000)/S(2000): {lil.summary['q99_ratio_4000_2000']:.3f}")
