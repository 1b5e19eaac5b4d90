"""Planning a privacy budget for a DP bootstrap.

Suppose we want B bootstrap releases that are jointly 1-GDP. Each release is a
Gaussian mechanism applied to a resample. A record can appear in a resample
more than once, so each release costs a little more than a plain Gaussian
release would: the per-release budget is ``mu / (factor * sqrt(B))`` with a
factor just under sqrt(2 - 2/e) ~ 1.1244, slightly below the naive
``mu / sqrt(B)``.
"""

import numpy as np

from dpboot.accountant import BootComposition, composition_factor, plan_budget

print("Composition factor sqrt(2 - 2/e) as n grows:")
for n in (10, 100, 1000, None):
    label = "inf" if n is None else n
    print(f"  n={label:>5}: {composition_factor(n):.6f}")

plan = plan_budget(mu_total=1.0, B=200, n=3000)
print(f"\nTotal budget 1.0 over B=200 releases, n=3000:")
print(f"  per-release mu  = {plan.mu_per_sample:.5f}")
print(f"  naive mu/sqrt(B) = {1 / np.sqrt(200):.5f}")

# The numerical accountant confirms the plan: its profile is close to GDP(1).
comp = BootComposition(plan.mu_per_sample, 3000, 200)
eps = np.array([0.0, 0.5, 1.0, 2.0])
print("\n  eps    delta (composed)")
for e, d in zip(eps, comp.delta(eps)):
    print(f"  {e:4.1f}   {d:.5f}")
