"""Diagnostics on small Gaussian-mixture pairs.

(1) The order-2 Renyi divergence of a mixture against a single Gaussian, in
    closed form.
(2) The exact delta(eps) of two mixture pairs, computed from the privacy-loss
    threshold, showing the first pair is strictly less private at eps = 1.
"""

from dpboot.diagnostics import pld_delta_pair, zcdp_counterexample

print(f"Renyi-2 divergence of the mixture pair: {zcdp_counterexample():.5f}")
d1, d2, t1, t3 = pld_delta_pair(1.0)
print(f"pair 1: delta(1) = {d1:.7f} (threshold {t1:.7f})")
print(f"pair 2: delta(1) = {d2:.7f} (threshold {t3:.7f})")
print("pair 1 is less private than pair 2" if d1 > d2 else "pair 2 is less private")
