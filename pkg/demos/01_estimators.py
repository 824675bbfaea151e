"""Zeroth-order estimators: what two or four function values buy you.

Run: python demos/01_estimators.py
"""

import numpy as np

from zosaddle import grad_estimate, hess_vec_estimate, hessian_estimate, make_quadratic, make_rng
from zosaddle.harness.stats import variance_study

A = np.diag([2.0, -2.0])
f = make_quadratic(A)
x = np.array([0.7, -0.3])
v = np.array([0.6, 0.8])
rng = make_rng(0)

# One random direction per sample; averaging many samples recovers the derivatives.
r = rng.standard_normal((200_000, 2))
print("true gradient     ", A @ x)
print("mean of F         ", grad_estimate(f, x, r, 1e-2).mean(axis=0))
print("true Hessian      ", A.ravel())
print("mean of H         ", hessian_estimate(f, x, r, 1e-2).mean(axis=0).ravel())
print("true A v          ", A @ v)
print("mean of H_v       ", hess_vec_estimate(f, x, v, r, 1e-2).mean(axis=0))
print(f"function evaluations so far: {f.eval_count}")

# The dense Hessian estimator's spread grows much faster with dimension than
# the Hessian-vector estimator's, which is why the eigenvector search uses H_v.
rows = variance_study(lambda d: make_quadratic(np.eye(d)), lambda d, g: np.zeros(d), [2, 10, 50], 2000, 1e-4, rng)
print(f"\n{'d':>4} {'std(H v)':>10} {'std(H_v)':>10}")
for row in rows:
    print(f"{row['d']:>4} {row['hessian_std']:>10.3g} {row['hessvec_std']:>10.3g}")
