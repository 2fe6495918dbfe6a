"""Split a U-statistic of an MA(2) sample into its level parts and check it closes.

Run: python demos/decomposition_identity.py
"""
from bershift import InnovationSpec, ShiftFunctional, ShiftProcess, generalized_decomposition, variance_kernel
from bershift.hoeffding import REMAINDER_NAMES

proc = ShiftProcess(InnovationSpec.rademacher(), ShiftFunctional.linear({0: 1.0, 1: 0.5, 2: -0.3}))
kernel = variance_kernel()
n = 150

g = generalized_decomposition(kernel, proc, n, stream=2024)
print(f"U_n = {g.u_n:.6f}, E U_n = {g.expected_u:.6f}, centred = {g.centered:.6f}")
print()
print("level     linear  degenerate" + "".join(f"{k:>10}" for k in REMAINDER_NAMES) + "        R7")
for d in g.levels:
    rem = "".join(f"{d.remainders[k]:10.4f}" for k in REMAINDER_NAMES)
    print(f"{d.ell:5d} {d.linear:10.4f} {d.degenerate_sum:11.4f}{rem}{d.r7:10.4f}")
print()
print(f"sum of parts = {g.total:.6f}")
print(f"relative residual = {g.relative_residual:.2e}")

# R7 is not a separate part: it measures how far the block-scaled linear
# sum used for the martingale step sits from the plain linear sum n sum g_l
print("level-wise R7 (n^-3/2 scale):", ", ".join(f"{d.r7 * n ** -1.5:.4f}" for d in g.levels))
