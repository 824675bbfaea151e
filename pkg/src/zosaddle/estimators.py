"""Zeroth-order derivative estimators built on Gaussian smoothing.

All estimators take only objective values.  Points, directions and unit
vectors may carry leading batch dimensions; the trailing axis is the
coordinate axis.  Evaluation cost per sample is fixed:

    grad_estimate      2 evaluations
    hessian_estimate   3 evaluations
    hess_vec_estimate  4 evaluations
    batch_residual     4 * m evaluations

Random directions come from ``numpy.random.Generator`` on a PCG64 bit
generator seeded with an integer; normals use numpy's ziggurat transform.
"""

from __future__ import annotations

import numpy as np

from .oracle import Objective

GRAD_EVALS = 2
HESSIAN_EVALS = 3
HESS_VEC_EVALS = 4


def make_rng(seed: int) -> np.random.Generator:
    """Reproducible direction stream for one replica."""
    return np.random.Generator(np.random.PCG64(seed))


def _check_length(l: float) -> float:
    if not l > 0:
        raise ValueError(f"difference length must be positive, got {l}")
    return float(l)


def grad_estimate(obj: Objective, x, r, l: float) -> np.ndarray:
    """Two-point estimate (f(x + l r) - f(x - l r)) / (2 l) * r.

    Unbiased for the gradient of the Gaussian smoothing of f at scale l.
    """
    l = _check_length(l)
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    vals = obj.eval(np.stack(np.broadcast_arrays(x + l * r, x - l * r)))
    return ((vals[0] - vals[1]) / (2 * l))[..., None] * r


def hessian_estimate(obj: Objective, x, r, l: float) -> np.ndarray:
    """Dense estimate (f(x+lr) + f(x-lr) - 2 f(x)) / (2 l^2) * (r r^T - I)."""
    l = _check_length(l)
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    x, r = np.broadcast_arrays(x, r)
    vals = obj.eval(np.stack([x + l * r, x - l * r, x]))
    coef = (vals[0] + vals[1] - 2 * vals[2]) / (2 * l * l)
    outer = r[..., :, None] * r[..., None, :] - np.eye(r.shape[-1])
    return coef[..., None, None] * outer


def hess_vec_estimate(obj: Objective, x, v, r, l: float, check_unit: bool = True) -> np.ndarray:
    """(F(x + l v, r, l) - F(x - l v, r, l)) / (2 l), sharing one direction r.

    Approximates the Hessian-vector product with O(d) variance instead of the
    O(d^4) of the dense estimator.  ``v`` must be a unit vector.
    """
    l = _check_length(l)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    if check_unit:
        norms = np.linalg.norm(v, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-8):
            raise ValueError("v must be a unit vector")
    lv, lr = l * v, l * r
    a, b = x + lv, x - lv
    vals = obj.eval(np.stack(np.broadcast_arrays(a + lr, a - lr, b + lr, b - lr)))
    coef = ((vals[0] - vals[1]) - (vals[2] - vals[3])) / (4 * l * l)
    return coef[..., None] * r


def batch_residual(obj: Objective, x, v, l: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """Projected mean (I - v v^T) * mean_i H_v(x, r_i, l) over m fresh directions."""
    if m < 1:
        raise ValueError("m must be >= 1")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    r = rng.standard_normal((m, x.shape[-1]))
    hbar = hess_vec_estimate(obj, x, v, r, l).mean(axis=0)
    return hbar - (v @ hbar) * v


def projected_mean(h, v) -> np.ndarray:
    """(I - v v^T) h along the trailing axis."""
    return h - np.sum(v * h, axis=-1, keepdims=True) * v


def moment_stats(samples) -> tuple:
    """Sample mean and its standard error along axis 0."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    return samples.mean(axis=0), samples.std(axis=0, ddof=1) / np.sqrt(n)
