"""Dependence coefficients theta_{l,p} for a finite window and a geometric process.

Run: python demos/dependence_profile.py
"""
from bershift import (InnovationSpec, ShiftFunctional, ShiftProcess, dependence_profile, geometric_functional,
                      summability_report, variance_kernel, variance_kernel_theta_bound)

kernel = variance_kernel()
finite = ShiftProcess(InnovationSpec.gaussian(), ShiftFunctional.linear({0: 1.0, 1: 0.5}))
geo = ShiftProcess(InnovationSpec.gaussian(), geometric_functional(0.5))

for name, proc, L in (("MA(1)", finite, 4), ("geometric 0.5", geo, 16)):
    print(f"{name}: window halfwidth W = {proc.halfwidth}")
    profiles = [dependence_profile(kernel, proc, L, p, R=20_000, stream=7) for p in (1.0, 2.0)]
    for e1, e2 in zip(profiles[0].entries, profiles[1].entries):
        line = f"  l={e1.ell:2d}  theta_1={e1.theta:.5f} (SE {e1.se:.5f})  theta_2={e2.theta:.5f}"
        if 1 <= e1.ell <= proc.halfwidth:
            vb = variance_kernel_theta_bound(proc, e1.ell, 2.0, R=20_000, stream=7)
            line += f"  bound_2={vb.printed:.5f}"
        print(line)
    # the CLT weights l^2 decay slowest, so it is the last to plateau
    for theorem in ("LLN", "LIL", "CLT"):
        rep = summability_report(profiles, theorem)
        print(f"  {theorem}: {rep.verdict}")
    print()
