"""Outer saddle search: reflected zeroth-order gradient steps.

    x <- x - alpha_x(n) (I - 2 V V^T) F(x, r, l(n))

followed by a warm-started eigenvector search at the new iterate.  The same
difference length l(n) feeds the outer gradient estimate and every inner
Hessian-vector estimate of outer step n.

Per outer iteration, replica b draws from its own generator, in order: one
outer direction (d normals), then for each j = 1..k a block of n_v_max inner
directions (fixed-iteration stopping) or per-step draws plus residual batches.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .eigensearch import DegenerateStepError, EigenSearchConfig, FixedIterations, _search_batch, orthonormalize
from .estimators import GRAD_EVALS, grad_estimate, make_rng
from .oracle import EvaluationError, Objective
from .schedules import Constant, LengthSchedule, StepSchedule, check_length, schedule_from_dict

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class SaddleConfig:
    k: int = 1
    n_x_max: int = 1000
    alpha_x: StepSchedule = Constant(1e-4)
    length: LengthSchedule = Constant(1e-3)
    inner: EigenSearchConfig = field(default_factory=EigenSearchConfig)
    warm_start: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_x_max < 0:
            raise ValueError("n_x_max must be >= 0")
        if self.inner.k != self.k:
            object.__setattr__(self, "inner", EigenSearchConfig(**{**self.inner.__dict__, "k": self.k}))

    def validate(self, d: int) -> None:
        if not 1 <= self.k <= d - 1:
            raise ValueError(f"k={self.k} must lie in [1, {d - 1}]")

    def evals_per_iteration(self) -> Optional[int]:
        """Exact cost of one outer step under fixed-iteration inner stopping."""
        if isinstance(self.inner.stopping, FixedIterations):
            return GRAD_EVALS + 4 * self.k * self.inner.n_v_max
        return None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_x_max": self.n_x_max,
            "alpha_x": self.alpha_x.to_dict(),
            "length": self.length.to_dict(),
            "inner": self.inner.to_dict(),
            "warm_start": self.warm_start,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SaddleConfig":
        k = int(data.get("k", 1))
        inner = dict(data.get("inner", {}))
        inner["k"] = k
        return cls(
            k=k,
            n_x_max=int(data.get("n_x_max", 1000)),
            alpha_x=schedule_from_dict(data.get("alpha_x", {"kind": "constant", "value": 1e-4})),
            length=schedule_from_dict(data.get("length", {"kind": "constant", "value": 1e-3})),
            inner=EigenSearchConfig.from_dict(inner),
            warm_start=bool(data.get("warm_start", True)),
            seed=int(data.get("seed", 0)),
        )


@dataclass
class RunRecord:
    """Trace of one search; row i is the state after i outer iterations."""

    n: np.ndarray
    x: np.ndarray
    dist_sq: Optional[np.ndarray]
    grad_norm_sq: Optional[np.ndarray]
    cumulative_evals: np.ndarray
    meta: dict = field(default_factory=dict)
    basis: Optional[np.ndarray] = None
    failure: Optional[str] = None

    def __len__(self) -> int:
        return len(self.n)

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def final_x(self) -> np.ndarray:
        return self.x[-1]

    def min_dist_sq(self) -> float:
        if self.dist_sq is None:
            raise ValueError("trace has no reference saddle")
        return float(np.min(self.dist_sq))


def reflection(V) -> np.ndarray:
    """Householder-type operator I - 2 V V^T."""
    V = np.asarray(V, dtype=float).reshape(np.shape(V)[0], -1)
    return np.eye(V.shape[0]) - 2.0 * V @ V.T


def _reflect(g, V):
    """(I - 2 V V^T) g for g (B, d), V (B, d, k)."""
    coef = np.einsum("bdk,bd->bk", V, g)
    return g - 2.0 * np.einsum("bdk,bk->bd", V, coef)


def saddle_step(x, V, g, alpha: float) -> np.ndarray:
    """x - alpha (I - 2 V V^T) g."""
    x = np.asarray(x, dtype=float)
    V = np.asarray(V, dtype=float).reshape(x.shape[0], -1)
    g = np.asarray(g, dtype=float)
    return x - alpha * (g - 2.0 * V @ (V.T @ g))


def _measure(obj: Objective, X):
    dist = grad = None
    if obj.saddle is not None:
        diff = X - obj.saddle
        dist = np.sum(diff * diff, axis=-1)
    if obj.gradient is not None:
        G = obj.gradient(X)
        grad = np.sum(G * G, axis=-1)
    return dist, grad


_STEP_ERRORS = (EvaluationError, DegenerateStepError, FloatingPointError, np.linalg.LinAlgError)


def _outer_step(obj, Xa, Va, rngs, cfg: SaddleConfig, n: int, a: float, l: float):
    d = Xa.shape[-1]
    r = np.stack([g.standard_normal(d) for g in rngs])
    F = grad_estimate(obj, Xa, r, l)
    Xa = Xa - a * _reflect(F, Va)
    if not cfg.warm_start:
        Va = np.stack([orthonormalize(g.standard_normal((cfg.k, d)).T) for g in rngs])
    newV, diag = _search_batch(obj, Xa, Va, cfg.inner, rngs, length=Constant(l), outer_n=n + 1)
    return Xa, newV, GRAD_EVALS + diag.evals


def _fail(failures, alive, stop_row, b, n, exc) -> None:
    failures[b] = f"{type(exc).__name__} at iteration {n}: {exc}"
    alive[b] = False
    stop_row[b] = n


def _check_divergence(Xa, idx, bound, failures, alive, stop_row, n) -> None:
    bad = ~np.all(np.isfinite(Xa), axis=-1) | (np.linalg.norm(Xa, axis=-1) > bound[idx])
    for b in idx[bad]:
        failures[b] = f"iterate diverged at iteration {n + 1}"
        alive[b] = False
        stop_row[b] = n + 1


def _search_replicas(
    obj: Objective,
    x0,
    V0,
    cfg: SaddleConfig,
    seeds: Sequence[int],
) -> list:
    """Lockstep saddle search for len(seeds) replicas sharing one objective.

    A replica that fails (non-finite value, divergence, degenerate cascade) is
    frozen with its partial trace and a failure message; the rest continue.
    """
    x0 = np.asarray(x0, dtype=float)
    d = x0.shape[-1]
    cfg.validate(d)
    B = len(seeds)
    rngs = [make_rng(s) for s in seeds]
    X = np.broadcast_to(x0, (B, d)).copy()
    if V0 is None:
        V = np.stack([orthonormalize(g.standard_normal((cfg.k, d)).T) for g in rngs])
    else:
        V = np.broadcast_to(orthonormalize(np.asarray(V0, dtype=float).reshape(d, cfg.k)), (B, d, cfg.k)).copy()
    V_init = V.copy()
    bound = DIVERGENCE_FACTOR * (1.0 + np.linalg.norm(x0, axis=-1))
    bound = np.broadcast_to(bound, (B,))
    check_length(cfg.length(0), float(np.max(np.abs(obj._func(X[:1])))) if obj.dim else 1.0)

    N = cfg.n_x_max
    xs = np.empty((N + 1, B, d))
    evals = np.zeros((N + 1, B), dtype=np.int64)
    xs[0] = X
    alive = np.ones(B, dtype=bool)
    stop_row = np.full(B, N, dtype=int)
    failures: list = [None] * B
    started = time.perf_counter()

    for n in range(N):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            xs[n + 1 :] = xs[n]
            evals[n + 1 :] = evals[n]
            break
        a, l = cfg.alpha_x(n), cfg.length(n)
        states = [rngs[b].bit_generator.state for b in idx]
        try:
            Xa, newV, step_evals = _outer_step(obj, X[idx], V[idx], [rngs[b] for b in idx], cfg, n, a, l)
        except _STEP_ERRORS as first:
            if idx.size == 1:
                _fail(failures, alive, stop_row, idx[0], n, first)
                xs[n + 1], evals[n + 1] = xs[n], evals[n]
                continue
            # replay this step one replica at a time to isolate the failure
            parts = []
            for b, state in zip(idx, states):
                rngs[b].bit_generator.state = state
                try:
                    parts.append((b,) + _outer_step(obj, X[b : b + 1], V[b : b + 1], [rngs[b]], cfg, n, a, l))
                except _STEP_ERRORS as exc:
                    _fail(failures, alive, stop_row, b, n, exc)
            xs[n + 1], evals[n + 1] = xs[n], evals[n]
            for b, xb, vb, eb in parts:
                X[b], V[b] = xb[0], vb[0]
                evals[n + 1, b] += eb[0]
            xs[n + 1] = X
            idx = np.array([p[0] for p in parts], dtype=int)
            Xa = X[idx]
            _check_divergence(Xa, idx, bound, failures, alive, stop_row, n)
            continue
        X[idx] = Xa
        V[idx] = newV
        evals[n + 1] = evals[n]
        evals[n + 1, idx] += step_evals
        xs[n + 1] = X
        _check_divergence(Xa, idx, bound, failures, alive, stop_row, n)
    wall = time.perf_counter() - started

    records = []
    for b, seed in enumerate(seeds):
        rows = stop_row[b] + 1
        xb = xs[:rows, b]
        finite = np.all(np.isfinite(xb), axis=-1)
        dist, grad = _measure(obj, np.where(finite[:, None], xb, 0.0))
        if dist is not None:
            dist = np.where(finite, dist, np.nan)
        if grad is not None:
            grad = np.where(finite, grad, np.nan)
        records.append(
            RunRecord(
                n=np.arange(rows),
                x=xb.copy(),
                dist_sq=dist,
                grad_norm_sq=grad,
                cumulative_evals=evals[:rows, b].copy(),
                meta={
                    "objective": obj.name,
                    "config": cfg.to_dict(),
                    "seed": int(seed),
                    "wall_time": wall / B,
                    "x0": x0.tolist(),
                    "V0": V_init[b].tolist(),
                },
                basis=V[b].copy(),
                failure=failures[b],
            )
        )
    return records


def saddle_search(obj: Objective, x0, V0=None, cfg: SaddleConfig = SaddleConfig(), seed: Optional[int] = None) -> RunRecord:
    """Derivative-free search for an index-k saddle starting at x0.

    ``V0`` overrides the initial unstable basis; by default it is drawn from the
    replica's generator.  ``seed`` defaults to ``cfg.seed``.
    """
    seed = cfg.seed if seed is None else seed
    return _search_replicas(obj, x0, V0, cfg, [seed])[0]


def deterministic_saddle_search(obj: Objective, x0, k: int, alpha, n_max: int) -> RunRecord:
    """Reference iteration with exact gradients and a dense eigensolver each step."""
    if obj.gradient is None or obj.hessian is None:
        raise ValueError("deterministic search needs analytic gradient and Hessian")
    if not callable(alpha):
        alpha = Constant(alpha) if alpha > 0 else (lambda n: 0.0)
    x = np.array(x0, dtype=float)
    d = x.shape[0]
    if not 1 <= k <= d - 1:
        raise ValueError(f"k={k} must lie in [1, {d - 1}]")
    xs = np.empty((n_max + 1, d))
    xs[0] = x
    V_prev = None
    failure = None
    started = time.perf_counter()
    rows = n_max + 1
    for n in range(n_max):
        w, U = np.linalg.eigh(obj.hessian(x))
        if k < d and w[k] - w[k - 1] < 1e-12:
            warnings.warn(f"eigenvalue gap below 1e-12 at iteration {n}", RuntimeWarning, stacklevel=2)
        V = U[:, :k]
        if V_prev is not None:
            signs = np.sign(np.sum(V * V_prev, axis=0))
            V = V * np.where(signs == 0, 1.0, signs)
        V_prev = V
        x = saddle_step(x, V, obj.gradient(x), alpha(n))
        xs[n + 1] = x
        if not np.all(np.isfinite(x)):
            failure = f"iterate diverged at iteration {n + 1}"
            rows = n + 2
            break
    xs = xs[:rows]
    dist, grad = _measure(obj, xs)
    return RunRecord(
        n=np.arange(rows),
        x=xs,
        dist_sq=dist,
        grad_norm_sq=grad,
        cumulative_evals=np.zeros(rows, dtype=np.int64),
        meta={"objective": obj.name, "method": "deterministic", "k": k, "wall_time": time.perf_counter() - started},
        basis=V_prev,
        failure=failure,
    )
