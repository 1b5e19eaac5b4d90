"""How close is the composed bootstrap curve to its Gaussian limit?

Writes alpha,beta CSVs for the numerically composed tradeoff curve and for
G_1 so they can be plotted side by side.
"""

import sys

import numpy as np

from dpboot.harness import emit_curve

out_dir = sys.argv[1] if len(sys.argv) > 1 else "curves"
curves = emit_curve("composed_vs_gdp", {"mu0": 1.0, "B": 500, "n": 100}, out_dir)
(alpha, composed), (_, limit) = curves.values()
print(f"wrote {len(curves)} curves to {out_dir}/")
print(f"largest gap between composed curve and G_1: {np.max(np.abs(composed - limit)):.4f}")
