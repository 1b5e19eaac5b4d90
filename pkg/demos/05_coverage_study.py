"""A small coverage study: DP bootstrap versus the non-private bootstrap.

Uses 50 replicates so it finishes in a few seconds; the acceptance test runs
the same study with 300.
"""

from dpboot.harness import SimConfig, simulate_coverage

cfg = SimConfig(n=3000, B=200, mus=(1.0, 0.1), replicates=50, seed=5)
report = simulate_coverage(cfg)
for c in report.cells:
    mu = "-" if c.mu is None else f"{c.mu:g}"
    print(f"{c.method:13s} mu={mu:4s} coverage={c.coverage:.2f} width={c.width:.4f}")
