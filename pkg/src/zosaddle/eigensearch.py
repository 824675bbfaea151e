"""Derivative-free deflated eigenvector search for the k lowest Hessian modes.

Each direction v_j is driven down the Rayleigh quotient by

    v_j <- normalize(v_j - alpha(n) (I - v_j v_j^T - sum_{i<j} v_i v_i^T) H_{v_j})

with H_{v_j} a four-point Hessian-vector estimate.  Directions are found one
after another; earlier ones are frozen and projected out of later ones.

The batched core (``_search_batch``) advances B independent replicas in
lockstep.  Replica b only ever consumes draws from ``rngs[b]`` so its result
does not depend on which other replicas share the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .estimators import HESS_VEC_EVALS, hess_vec_estimate
from .oracle import Objective
from .schedules import Constant, LengthSchedule, StepSchedule, schedule_from_dict

DEGENERATE_NORM = 1e-12
MAX_DEGENERATE_RUN = 10


class DegenerateStepError(RuntimeError):
    pass


@dataclass(frozen=True)
class FixedIterations:
    def to_dict(self) -> dict:
        return {"kind": "fixed"}


@dataclass(frozen=True)
class ResidualBatch:
    """Stop once ||(I - v v^T) mean(H_v)|| < tol over a fresh batch of m directions.

    With ``growth=(c, p)`` the batch size at outer iteration n is ceil(c * n^p)
    (at least 1), otherwise the fixed ``m`` is used.
    """

    tol: float
    m: int = 1000
    growth: Optional[tuple] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    def sample_size(self, outer_n: int = 0) -> int:
        if self.growth is None:
            return self.m
        c, p = self.growth
        return max(1, math.ceil(c * max(outer_n, 1) ** p))

    def to_dict(self) -> dict:
        out = {"kind": "residual", "tol": self.tol, "m": self.m}
        if self.growth is not None:
            out["growth"] = list(self.growth)
        return out


Stopping = Union[FixedIterations, ResidualBatch]


@dataclass(frozen=True)
class EigenSearchConfig:
    """Knobs of the inner search.

    ``per_dim`` divides the step schedule by the dimension d, the alternative
    scaling some experiments use.
    """

    k: int = 1
    n_v_max: int = 100
    alpha_v: StepSchedule = Constant(2e-4)
    length: LengthSchedule = Constant(1e-3)
    stopping: Stopping = field(default_factory=FixedIterations)
    per_dim: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n_v_max < 0:
            raise ValueError("n_v_max must be >= 0")

    def validate(self, d: int) -> None:
        if not 1 <= self.k <= d - 1:
            raise ValueError(f"k={self.k} must lie in [1, {d - 1}]")

    def step(self, n: int, d: int) -> float:
        a = self.alpha_v(n)
        return a / d if self.per_dim else a

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_v_max": self.n_v_max,
            "alpha_v": self.alpha_v.to_dict(),
            "length": self.length.to_dict(),
            "stopping": self.stopping.to_dict(),
            "per_dim": self.per_dim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EigenSearchConfig":
        stop = data.get("stopping", {"kind": "fixed"})
        if stop["kind"] == "fixed":
            stopping = FixedIterations()
        elif stop["kind"] == "residual":
            growth = stop.get("growth")
            stopping = ResidualBatch(float(stop["tol"]), int(stop.get("m", 1000)), tuple(growth) if growth else None)
        else:
            raise ValueError(f"unknown stopping kind {stop['kind']!r}")
        return cls(
            k=int(data.get("k", 1)),
            n_v_max=int(data.get("n_v_max", 100)),
            alpha_v=schedule_from_dict(data.get("alpha_v", {"kind": "constant", "value": 2e-4})),
            length=schedule_from_dict(data.get("length", {"kind": "constant", "value": 1e-3})),
            stopping=stopping,
            per_dim=bool(data.get("per_dim", False)),
        )


@dataclass
class EigenDiagnostics:
    iterations: np.ndarray  # (B, k) inner steps taken per direction
    residuals: np.ndarray  # (B, k) last batch residual norm, nan without checks
    evals: np.ndarray  # (B,) objective evaluations consumed
    degenerate: np.ndarray  # (B,) degenerate steps encountered


# ---------------------------------------------------------------------------
# linear algebra helpers


def orthonormalize(V) -> np.ndarray:
    """Modified Gram-Schmidt on the columns of V, shape (..., d, k)."""
    V = np.array(V, dtype=float)
    k = V.shape[-1]
    for j in range(k):
        for _ in range(2):
            for i in range(j):
                qi = V[..., :, i]
                V[..., :, j] -= np.sum(qi * V[..., :, j], axis=-1, keepdims=True) * qi
        norm = np.linalg.norm(V[..., :, j], axis=-1, keepdims=True)
        if np.any(norm < DEGENERATE_NORM):
            raise DegenerateStepError("basis is rank deficient")
        V[..., :, j] /= norm
    return V


def subspace_distance(V, W) -> float:
    """Spectral norm of V V^T - W W^T for bases with orthonormal columns."""
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if W.ndim == 1:
        W = W[:, None]
    if V.shape != W.shape:
        raise ValueError(f"basis shapes differ: {V.shape} vs {W.shape}")
    return float(np.linalg.norm(V @ V.T - W @ W.T, 2))


def _project_out(u, prior):
    """u - P P^T u for prior of shape (B, d, j); u of shape (B, d)."""
    if prior.shape[-1] == 0:
        return u
    coef = np.einsum("bdj,bd->bj", prior, u)
    return u - np.einsum("bdj,bj->bd", prior, coef)


def _step_batch(v, prior, h, alpha):
    u = h - (v * h).sum(axis=-1, keepdims=True) * v
    u = _project_out(u, prior)
    w = v - alpha * u
    norm = np.sqrt((w * w).sum(axis=-1, keepdims=True))
    degenerate = norm[..., 0] < DEGENERATE_NORM
    if degenerate.any():
        safe = np.where(degenerate[..., None], 1.0, norm)
        return np.where(degenerate[..., None], v, w / safe), degenerate
    return w / norm, degenerate


def eigen_step(v, deflate, h, alpha: float):
    """One projected update; returns ``(v_new, degenerate)``.

    ``deflate`` holds frozen directions as columns (or is None/empty).  When the
    pre-normalisation vector collapses below 1e-12 the input is returned with
    ``degenerate=True``.
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    prior = np.zeros((d, 0)) if deflate is None else np.asarray(deflate, dtype=float).reshape(d, -1)
    out, degenerate = _step_batch(v[None], prior[None], np.asarray(h, dtype=float)[None], alpha)
    return out[0], bool(degenerate[0])


# ---------------------------------------------------------------------------
# search


def _search_batch(
    obj: Objective,
    X: np.ndarray,
    V: np.ndarray,
    cfg: EigenSearchConfig,
    rngs: Sequence[np.random.Generator],
    length: Optional[LengthSchedule] = None,
    outer_n: int = 0,
):
    """Run the deflated search for B replicas; X (B, d), V (B, d, k)."""
    B, d = X.shape
    k = cfg.k
    length = cfg.length if length is None else length
    V = np.array(V, dtype=float)
    iters = np.zeros((B, k), dtype=int)
    residuals = np.full((B, k), np.nan)
    evals = np.zeros(B, dtype=np.int64)
    degenerate = np.zeros(B, dtype=int)
    stop = cfg.stopping

    for j in range(k):
        prior = V[:, :, :j]
        vj = _project_out(V[:, :, j], prior)
        vj = vj / np.linalg.norm(vj, axis=-1, keepdims=True)
        run = np.zeros(B, dtype=int)

        if isinstance(stop, FixedIterations):
            if cfg.n_v_max:
                R = np.stack([g.standard_normal((cfg.n_v_max, d)) for g in rngs], axis=1)
            for n in range(cfg.n_v_max):
                h = hess_vec_estimate(obj, X, vj, R[n], length(n), check_unit=False)
                vj, bad = _step_batch(vj, prior, h, cfg.step(n, d))
                if bad.any():
                    run = np.where(bad, run + 1, 0)
                    degenerate += bad
                    if np.any(run > MAX_DEGENERATE_RUN):
                        raise DegenerateStepError(f"more than {MAX_DEGENERATE_RUN} consecutive degenerate steps")
                else:
                    run[:] = 0
            iters[:, j] = cfg.n_v_max
            evals += HESS_VEC_EVALS * cfg.n_v_max
        else:
            m = stop.sample_size(outer_n)
            live = np.ones(B, dtype=bool)
            for n in range(cfg.n_v_max):
                idx = np.flatnonzero(live)
                if idx.size == 0:
                    break
                r = np.stack([rngs[b].standard_normal(d) for b in idx])
                l = length(n)
                h = hess_vec_estimate(obj, X[idx], vj[idx], r, l, check_unit=False)
                new, bad = _step_batch(vj[idx], prior[idx], h, cfg.step(n, d))
                vj[idx] = new
                run[idx] = np.where(bad, run[idx] + 1, 0)
                degenerate[idx] += bad
                if np.any(run > MAX_DEGENERATE_RUN):
                    raise DegenerateStepError(f"more than {MAX_DEGENERATE_RUN} consecutive degenerate steps")
                iters[idx, j] += 1
                # residual check on a fresh batch per live replica
                Rm = np.stack([rngs[b].standard_normal((m, d)) for b in idx], axis=1)  # (m, b, d)
                hm = hess_vec_estimate(obj, X[idx], vj[idx], Rm, l, check_unit=False).mean(axis=0)
                res = hm - np.sum(vj[idx] * hm, axis=-1, keepdims=True) * vj[idx]
                res = _project_out(res, prior[idx])
                rnorm = np.linalg.norm(res, axis=-1)
                residuals[idx, j] = rnorm
                evals[idx] += HESS_VEC_EVALS * (1 + m)
                live[idx[rnorm < stop.tol]] = False
        V[:, :, j] = vj

    V = orthonormalize(V)
    return V, EigenDiagnostics(iters, residuals, evals, degenerate)


def random_basis(rng: np.random.Generator, d: int, k: int) -> np.ndarray:
    """k Gaussian directions, orthonormalised; draws k*d normals from ``rng``."""
    return orthonormalize(rng.standard_normal((k, d)).T)


def eigen_search(
    obj: Objective,
    x,
    V0,
    cfg: EigenSearchConfig,
    rng: np.random.Generator,
):
    """Approximate the k lowest-curvature directions of the Hessian at x.

    Args:
        obj: Black-box objective; only ``obj.eval`` is used.
        x: Fixed point, shape (d,).
        V0: Initial basis (d, k), a single vector when k == 1, or None for
            random Gaussian starts.
        cfg: Search configuration.
        rng: Direction stream.

    Returns:
        ``(V, diagnostics)`` with V of shape (d, k), orthonormal columns.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    cfg.validate(d)
    if V0 is None or np.size(V0) == 0:
        V = random_basis(rng, d, cfg.k)
    else:
        V = np.asarray(V0, dtype=float).reshape(d, -1)
        if V.shape[1] != cfg.k:
            raise ValueError(f"V0 has {V.shape[1]} columns, expected k={cfg.k}")
        V = orthonormalize(V)
    Vb, diag = _search_batch(obj, x[None], V[None], cfg, [rng])
    return Vb[0], EigenDiagnostics(diag.iterations[0], diag.residuals[0], int(diag.evals[0]), int(diag.degenerate[0]))


def with_length(cfg: EigenSearchConfig, l: float) -> EigenSearchConfig:
    return replace(cfg, length=Constant(l))
