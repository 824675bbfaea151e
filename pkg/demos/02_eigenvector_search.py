"""Finding unstable directions from function values only.

On f(x) = x^T diag(-2, 1, 3) x / 2 the single unstable direction is e1 and the
two lowest directions span {e1, e2}.

Run: python demos/02_eigenvector_search.py
"""

import numpy as np

from zosaddle import Constant, EigenSearchConfig, ResidualBatch, eigen_search, make_quadratic, make_rng, subspace_distance

f = make_quadratic(np.diag([-2.0, 1.0, 3.0]))
x = np.zeros(3)

cfg = EigenSearchConfig(k=1, n_v_max=2000, alpha_v=Constant(2e-3), length=Constant(1e-4))
V, diag = eigen_search(f, x, None, cfg, make_rng(1))
print(f"k=1: v = {np.round(V[:, 0], 4)}, |<v, e1>| = {abs(V[0, 0]):.4f}, evaluations {diag.evals}")

cfg = EigenSearchConfig(k=2, n_v_max=2000, alpha_v=Constant(2e-3), length=Constant(1e-4))
V, _ = eigen_search(f, x, None, cfg, make_rng(2))
print(f"k=2: distance to span(e1, e2) = {subspace_distance(V, np.eye(3)[:, :2]):.2e}")

# With a batch-residual stopping rule the search quits as soon as the averaged
# residual is small, which is what makes warm starts cheap.
stop = ResidualBatch(tol=0.05, m=10_000)
cfg = EigenSearchConfig(k=1, n_v_max=10, alpha_v=Constant(1e-3), length=Constant(1e-4), stopping=stop)
_, diag = eigen_search(f, x, np.eye(3)[:, :1], cfg, make_rng(3))
print(f"started on e1: stopped after {diag.iterations[0]} step(s), residual {diag.residuals[0]:.3f}")
