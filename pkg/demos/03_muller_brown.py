"""Saddle search on the Muller-Brown surface.

Starting near a minimum, the reflected-gradient step climbs along the
unstable direction and descends along the stable one.  With constant step
and difference length the error decays linearly, then levels off at a
plateau set by the length.

Run: python demos/03_muller_brown.py
"""

import numpy as np

from zosaddle import Constant, SaddleConfig, deterministic_saddle_search, make_muller_brown, saddle_search
from zosaddle.harness.stats import fit_linear_rate

f = make_muller_brown()
print("reference saddle:", np.round(f.saddle, 6))

cfg = SaddleConfig(n_x_max=1000, alpha_x=Constant(1e-4), length=Constant(1e-3))
rec = saddle_search(f, [0.0, 1.0], cfg=cfg, seed=0)
for n in (0, 100, 200, 400, 700, 1000):
    print(f"n={n:5d}  dist_sq={rec.dist_sq[n]:.3e}  evals={rec.cumulative_evals[n]}")

fit = fit_linear_rate(rec)
print(f"linear phase: log-rate {fit['slope']:.4f} per step, plateau {fit['plateau']:.2e} from n={fit['onset']}")

det = deterministic_saddle_search(f, [0.0, 1.0], 1, 1e-4, 1000)
print(f"exact-derivative dynamics at n=1000: dist_sq={det.dist_sq[-1]:.3e}")
