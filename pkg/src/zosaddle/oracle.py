"""Black-box objectives and the benchmark landscapes.

Every objective accepts points of shape ``(..., d)`` and returns values of
shape ``(...)``.  The evaluation counter is bumped by the number of points
evaluated, so a single-point call costs exactly one evaluation.

Reference derivatives (``gradient``, ``hessian``) and ``saddle`` exist for
measurement only.  The search algorithms never touch them.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class EvaluationError(RuntimeError):
    """Raised when an objective cannot produce a finite value at a point."""


class Objective:
    """Counted black-box function f: R^d -> R.

    Args:
        dim: Dimension of the domain.
        func: Vectorised evaluation, ``(..., d) -> (...)``.
        gradient: Optional analytic gradient, ``(..., d) -> (..., d)``.
        hessian: Optional analytic Hessian at a single point, ``(d,) -> (d, d)``.
        saddle: Optional known critical point.
        name: Label used in traces and the registry.
    """

    def __init__(
        self,
        dim: int,
        func: Callable[[np.ndarray], np.ndarray],
        gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        saddle: Optional[np.ndarray] = None,
        name: str = "objective",
    ):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self._func = func
        self.gradient = gradient
        self.hessian = hessian
        self.saddle = None if saddle is None else np.asarray(saddle, dtype=float)
        self.name = name
        self.eval_count = 0

    def __call__(self, x) -> np.ndarray:
        return self.eval(x)

    def eval(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected trailing dimension {self.dim}, got {x.shape}")
        self.eval_count += x.size // self.dim
        # overflow is reported below as an EvaluationError, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            values = self._func(x)
        if not np.isfinite(values).all():
            raise EvaluationError(f"{self.name}: non-finite objective value")
        return values

    @property
    def has_reference(self) -> bool:
        return self.gradient is not None

    def reset_count(self) -> None:
        self.eval_count = 0

    def __repr__(self) -> str:
        return f"Objective(name={self.name!r}, dim={self.dim}, evals={self.eval_count})"


# ---------------------------------------------------------------------------
# test objectives


def make_quadratic(A) -> Objective:
    """f(x) = x^T A x / 2 for a symmetric matrix A."""
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be a square matrix")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("A must be symmetric")
    d = A.shape[0]

    def func(x):
        # einsum rather than matmul: BLAS rounding would depend on the batch shape
        return 0.5 * np.einsum("...i,ij,...j->...", x, A, x)

    def gradient(x):
        return np.asarray(x, dtype=float) @ A

    def hessian(x):
        return A.copy()

    eigs = np.linalg.eigvalsh(A)
    saddle = None
    if eigs.min() < 0 < eigs.max() and np.all(np.abs(eigs) > 0):
        saddle = np.zeros(d)
    return Objective(d, func, gradient, hessian, saddle, name="quadratic")


def make_sum_of_sines(d: int) -> Objective:
    """f(x) = sum_i sin(x_i); every derivative is bounded by 1."""
    if d < 1:
        raise ValueError("d must be >= 1")

    def func(x):
        return np.sum(np.sin(x), axis=-1)

    def gradient(x):
        return np.cos(x)

    def hessian(x):
        return np.diag(-np.sin(x))

    return Objective(d, func, gradient, hessian, None, name="sum_of_sines")


def smoothed_sines_gradient(x, length: float) -> np.ndarray:
    """Exact gradient of the Gaussian smoothing of sum(sin) at scale ``length``."""
    return np.exp(-0.5 * length**2) * np.cos(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Muller-Brown


@dataclass(frozen=True)
class MullerBrownParams:
    A: tuple = (-200.0, -100.0, -170.0, 15.0)
    a: tuple = (-1.0, -1.0, -6.5, 0.7)
    b: tuple = (0.0, 0.0, 11.0, 0.6)
    c: tuple = (-10.0, -10.0, -6.5, 0.7)
    x0: tuple = (1.0, 0.0, -0.5, -1.0)
    y0: tuple = (0.0, 0.5, 1.5, 1.0)

    def arrays(self):
        return tuple(np.asarray(v, dtype=float) for v in (self.A, self.a, self.b, self.c, self.x0, self.y0))


class _MBArrays:
    def __init__(self, p: MullerBrownParams):
        self.A, self.a, self.b, self.c, self.x0, self.y0 = p.arrays()

    def exponent(self, x):
        dx = x[..., 0:1] - self.x0
        dy = x[..., 1:2] - self.y0
        return dx, dy, self.A * np.exp(self.a * dx * dx + self.b * dx * dy + self.c * dy * dy)

    def func(self, x):
        return np.sum(self.exponent(x)[2], axis=-1)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        dx, dy, e = self.exponent(x)
        px = 2 * self.a * dx + self.b * dy
        py = self.b * dx + 2 * self.c * dy
        return np.stack([np.sum(e * px, axis=-1), np.sum(e * py, axis=-1)], axis=-1)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        dx, dy, e = self.exponent(x)
        px = 2 * self.a * dx + self.b * dy
        py = self.b * dx + 2 * self.c * dy
        hxx = np.sum(e * (px * px + 2 * self.a), axis=-1)
        hxy = np.sum(e * (px * py + self.b), axis=-1)
        hyy = np.sum(e * (py * py + 2 * self.c), axis=-1)
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)


def find_muller_brown_saddle(
    params: MullerBrownParams = MullerBrownParams(),
    near=(-0.822, 0.624),
    tol: float = 1e-12,
) -> np.ndarray:
    """Locate the index-1 saddle nearest ``near``.

    A grid scan keeps cells where both gradient components change sign and the
    Hessian is indefinite; Newton on the analytic gradient polishes each
    candidate.  Returns the converged candidate closest to ``near``.
    """
    mb = _MBArrays(params)
    xs = np.linspace(-1.5, 1.2, 271)
    ys = np.linspace(-0.5, 2.0, 251)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    G = mb.gradient(np.stack([X, Y], -1))
    gx, gy = G[..., 0], G[..., 1]

    def changes(s):
        c = s[:-1, :-1]
        return (np.sign(c) != np.sign(s[1:, :-1])) | (np.sign(c) != np.sign(s[:-1, 1:])) | (
            np.sign(c) != np.sign(s[1:, 1:])
        )

    cells = np.argwhere(changes(gx) & changes(gy))
    found = []
    for i, j in cells:
        z = np.array([xs[i] + 0.5 * (xs[1] - xs[0]), ys[j] + 0.5 * (ys[1] - ys[0])])
        for _ in range(100):
            g = mb.gradient(z)
            if np.linalg.norm(g) < tol:
                break
            z = z - np.linalg.solve(mb.hessian(z), g)
            if not np.all(np.isfinite(z)):
                break
        g = mb.gradient(z)
        if np.all(np.isfinite(z)) and np.linalg.norm(g) < tol:
            if np.linalg.det(mb.hessian(z)) < 0:
                found.append(z)
    if not found:
        raise RuntimeError("no Muller-Brown saddle located")
    found = np.array(found)
    best = found[np.argmin(np.linalg.norm(found - np.asarray(near), axis=1))]
    return best


@functools.lru_cache(maxsize=None)
def _cached_mb_saddle(params: MullerBrownParams) -> tuple:
    return tuple(find_muller_brown_saddle(params))


def make_muller_brown(params: MullerBrownParams = MullerBrownParams()) -> Objective:
    saddle = None
    if params == MullerBrownParams():
        saddle = np.array(_cached_mb_saddle(params))
    mb = _MBArrays(params)
    return Objective(
        2,
        mb.func,
        mb.gradient,
        mb.hessian,
        saddle,
        name="muller_brown",
    )


# ---------------------------------------------------------------------------
# modified Rosenbrock


@dataclass(frozen=True)
class ModRosenbrockParams:
    d: int
    s: tuple

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if len(self.s) != self.d:
            raise ValueError("s must have length d")

    @classmethod
    def index_pattern(cls, d: int, n_neg: int, s_neg: float = -1000.0, s_pos: float = 1.0):
        """First ``n_neg`` coefficients set to ``s_neg``, the rest to ``s_pos``."""
        return cls(d, tuple([s_neg] * n_neg + [s_pos] * (d - n_neg)))


def make_mod_rosenbrock(d: int, s) -> Objective:
    """Rosenbrock chain plus s_i * arctan(x_i - 1)^2 terms; critical at (1, ..., 1)."""
    s = np.asarray(s, dtype=float)
    ModRosenbrockParams(d, tuple(s))  # validation

    def func(x):
        head, tail = x[..., :-1], x[..., 1:]
        ros = np.sum(100.0 * (tail - head**2) ** 2 + (1.0 - head) ** 2, axis=-1)
        return ros + np.sum(s * np.arctan(x - 1.0) ** 2, axis=-1)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        head, tail = x[..., :-1], x[..., 1:]
        t = tail - head**2
        g = np.zeros_like(x)
        g[..., :-1] += -400.0 * head * t - 2.0 * (1.0 - head)
        g[..., 1:] += 200.0 * t
        u = x - 1.0
        g += 2.0 * s * np.arctan(u) / (1.0 + u * u)
        return g

    def hessian(x):
        x = np.asarray(x, dtype=float)
        H = np.zeros((d, d))
        i = np.arange(d - 1)
        head, tail = x[:-1], x[1:]
        H[i, i] += 1200.0 * head**2 - 400.0 * tail + 2.0
        H[i + 1, i + 1] += 200.0
        H[i, i + 1] = H[i + 1, i] = -400.0 * head
        u = x - 1.0
        w = 1.0 + u * u
        H[np.arange(d), np.arange(d)] += 2.0 * s * (1.0 - 2.0 * u * np.arctan(u)) / (w * w)
        return H

    return Objective(d, func, gradient, hessian, np.ones(d), name="mod_rosenbrock")


# ---------------------------------------------------------------------------
# implicit objective f(x, y) = min_z (x - z1)^2 + (y - z2)^2 + sin(z1 z2)


def _inner_parts(p, z):
    z1, z2 = z[..., 0], z[..., 1]
    s, c = np.sin(z1 * z2), np.cos(z1 * z2)
    g = np.stack([-2 * (p[..., 0] - z1) + z2 * c, -2 * (p[..., 1] - z2) + z1 * c], -1)
    h11 = 2 - z2 * z2 * s
    h22 = 2 - z1 * z1 * s
    h12 = c - z1 * z2 * s
    return g, h11, h12, h22


def _inner_value(p, z):
    return np.sum((p - z) ** 2, axis=-1) + np.sin(z[..., 0] * z[..., 1])


class ImplicitObjective(Objective):
    """f(x, y) = min_z g(x, y, z) evaluated by damped Newton on the z-gradient.

    With ``warm_start`` off (default) every solve starts from z = (x, y), which
    makes each evaluation a pure function of its argument.  With it on, the
    previous solution is reused as the starting guess when shapes match.
    """

    def __init__(self, inner_tol: float = 1e-12, max_iter: int = 100, warm_start: bool = False):
        if inner_tol <= 0:
            raise ValueError("inner_tol must be positive")
        self.inner_tol = inner_tol
        self.max_iter = max_iter
        self.warm_start = warm_start
        self._last_z: Optional[np.ndarray] = None
        super().__init__(
            2, self._evaluate, self._gradient, self._hessian, np.zeros(2), name="implicit_2d"
        )

    def reset_cache(self) -> None:
        self._last_z = None

    def solve_inner(self, p, z0=None) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        z = p.copy() if z0 is None else np.array(z0, dtype=float)
        active = np.ones(p.shape[:-1], dtype=bool)
        for _ in range(self.max_iter):
            g, h11, h12, h22 = _inner_parts(p, z)
            gnorm = np.sqrt(np.sum(g * g, axis=-1))
            active = gnorm > self.inner_tol
            if not np.any(active):
                return z
            det = h11 * h22 - h12 * h12
            pd = (h11 > 0) & (det > 0)
            safe = np.where(pd, det, 1.0)
            newton = -np.stack([h22 * g[..., 0] - h12 * g[..., 1], h11 * g[..., 1] - h12 * g[..., 0]], -1)
            step = np.where(pd[..., None], newton / safe[..., None], -0.25 * g)
            step = np.where(active[..., None], step, 0.0)
            f0 = _inner_value(p, z)
            t = np.ones(p.shape[:-1])
            for _ in range(40):
                trial = z + t[..., None] * step
                # near convergence value changes drop below round-off; a smaller gradient also counts
                tg = _inner_parts(p, trial)[0]
                worse = (_inner_value(p, trial) > f0 + 1e-14 * np.abs(f0) + 1e-300) & (
                    np.sqrt(np.sum(tg * tg, axis=-1)) >= gnorm
                )
                if not np.any(worse & active):
                    break
                t = np.where(worse & active, 0.5 * t, t)
            z = z + t[..., None] * step
        g = _inner_parts(p, z)[0]
        if np.any(np.sqrt(np.sum(g * g, axis=-1)) > self.inner_tol):
            raise EvaluationError("implicit objective: inner solver did not converge")
        return z

    def _evaluate(self, p):
        z0 = None
        if self.warm_start and self._last_z is not None and self._last_z.shape == p.shape:
            z0 = self._last_z
        z = self.solve_inner(p, z0)
        if self.warm_start:
            self._last_z = z
        return _inner_value(p, z)

    def _gradient(self, p):
        p = np.asarray(p, dtype=float)
        z = self.solve_inner(p)
        return 2.0 * (p - z)

    def _hessian(self, p):
        """Implicit-function-theorem Hessian: g_xx - g_xz g_zz^{-1} g_zx."""
        p = np.asarray(p, dtype=float)
        z = self.solve_inner(p)
        _, h11, h12, h22 = _inner_parts(p, z)
        gzz = np.array([[h11, h12], [h12, h22]])
        gxz = -2.0 * np.eye(2)
        return 2.0 * np.eye(2) - gxz @ np.linalg.solve(gzz, gxz.T)


def make_implicit_2d(inner_tol: float = 1e-12, warm_start: bool = False) -> ImplicitObjective:
    return ImplicitObjective(inner_tol=inner_tol, warm_start=warm_start)


# ---------------------------------------------------------------------------
# deep linear network loss


@dataclass
class LinearNetSpec:
    """Loss ||W_H ... W_1 X - Y||_F^2 of a deep linear network.

    ``dims`` lists d_0 .. d_H.  ``index_set`` holds 1-based indices into the
    eigenvalues of Sigma_YX Sigma_XX^{-1} Sigma_YX^T sorted in decreasing order.
    """

    dims: Sequence[int]
    X: np.ndarray
    Y: np.ndarray
    index_set: Sequence[int] = ()
    scale: float = 1.0
    shapes: list = field(init=False)

    def __post_init__(self):
        self.dims = [int(v) for v in self.dims]
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if len(self.dims) < 2:
            raise ValueError("need at least one layer")
        if self.X.shape[0] != self.dims[0] or self.Y.shape[0] != self.dims[-1]:
            raise ValueError("data shapes do not match layer dims")
        if self.X.shape[1] != self.Y.shape[1]:
            raise ValueError("X and Y need the same number of samples")
        self.shapes = [(self.dims[h + 1], self.dims[h]) for h in range(self.depth)]

    @property
    def depth(self) -> int:
        return len(self.dims) - 1

    @property
    def n_params(self) -> int:
        return sum(a * b for a, b in self.shapes)

    def unflatten(self, w) -> list:
        """Split (..., P) into per-layer arrays (..., d_h, d_{h-1}); column-major within a layer."""
        w = np.asarray(w, dtype=float)
        out, pos = [], 0
        for rows, cols in self.shapes:
            block = w[..., pos : pos + rows * cols]
            out.append(np.swapaxes(block.reshape(block.shape[:-1] + (cols, rows)), -1, -2))
            pos += rows * cols
        return out

    def flatten(self, mats) -> np.ndarray:
        parts = []
        for m in mats:
            m = np.asarray(m, dtype=float)
            parts.append(np.swapaxes(m, -1, -2).reshape(m.shape[:-2] + (-1,)))
        return np.concatenate(parts, axis=-1)

    @classmethod
    def random(
        cls,
        depth: int = 5,
        d_x: int = 10,
        d_y: int = 4,
        width: int = 10,
        n_samples: int = 100,
        index_set: Sequence[int] = (1,),
        seed: int = 0,
        scale: float = 1.0,
    ) -> "LinearNetSpec":
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((d_x, n_samples))
        Y = rng.standard_normal((d_y, n_samples))
        dims = [d_x] + [width] * (depth - 1) + [d_y]
        return cls(dims, X, Y, tuple(index_set), scale)




def make_linear_net(spec: LinearNetSpec) -> Objective:
    X, Y, c = spec.X, spec.Y, spec.scale

    def func(w):
        mats = spec.unflatten(w)
        out = X
        for m in mats:
            out = m @ out
        E = out - Y
        return c * np.sum(E * E, axis=(-1, -2))

    def gradient(w):
        mats = spec.unflatten(w)
        fwd = [X]
        for m in mats:
            fwd.append(m @ fwd[-1])
        back = 2.0 * c * (fwd[-1] - Y)
        grads = [None] * spec.depth
        for h in range(spec.depth - 1, -1, -1):
            grads[h] = back @ np.swapaxes(fwd[h], -1, -2)
            back = np.swapaxes(mats[h], -1, -2) @ back
        return spec.flatten(grads)

    def hessian(w, step: float = 1e-5):
        # central differences of the analytic gradient, symmetrised
        w = np.asarray(w, dtype=float)
        P = w.size
        E = np.eye(P) * step
        H = (gradient(w + E) - gradient(w - E)) / (2 * step)
        return 0.5 * (H + H.T)

    saddle = None
    try:
        saddle = construct_net_saddle(spec)
    except ValueError:
        pass
    return Objective(spec.n_params, func, gradient, hessian, saddle, name="linear_net")


def construct_net_saddle(spec: LinearNetSpec) -> np.ndarray:
    """Closed-form critical point of the deep linear loss for the chosen index set."""
    d0 = spec.dims[0]
    if any(v != d0 for v in spec.dims[1:-1]):
        raise ValueError("hidden widths must equal the input dimension")
    X, Y = spec.X, spec.Y
    Sxx = X @ X.T
    if np.linalg.cond(Sxx) > 1e12:
        raise ValueError("Sigma_XX is singular")
    Syx = Y @ X.T
    B = np.linalg.solve(Sxx, Syx.T).T  # Syx Sxx^{-1}
    Sigma = B @ Syx.T
    lam, U = np.linalg.eigh(0.5 * (Sigma + Sigma.T))
    order = np.argsort(lam)[::-1]
    U = U[:, order]
    r_max = min(spec.dims)
    idx = [int(i) - 1 for i in spec.index_set]
    if any(i < 0 or i >= r_max for i in idx):
        raise ValueError(f"index set must lie in 1..{r_max}")
    Us = U[:, idx]
    s, dy = len(idx), spec.dims[-1]
    W1 = np.zeros(spec.shapes[0])
    W1[:s] = Us.T @ B
    mats = [W1]
    for h in range(1, spec.depth - 1):
        mats.append(np.eye(d0))
    WH = np.zeros(spec.shapes[-1])
    WH[:, :s] = Us
    if spec.depth == 1:
        raise ValueError("depth must be at least 2")
    mats.append(WH)
    return spec.flatten(mats)


def count_negative(eigenvalues, rel_tol: float = 1e-6) -> int:
    """Eigenvalues below -rel_tol * max|eig|."""
    eigenvalues = np.asarray(eigenvalues)
    tau = rel_tol * np.abs(eigenvalues).max()
    return int(np.sum(eigenvalues < -tau))


# ---------------------------------------------------------------------------
# registry


def _linear_net_from_params(**params) -> Objective:
    return make_linear_net(LinearNetSpec.random(**params))


def _rosenbrock_from_params(d: int = 2, s=None, n_neg: Optional[int] = None, s_neg: float = -1000.0):
    if s is None:
        if n_neg is None:
            raise ValueError("mod_rosenbrock needs either s or n_neg")
        s = ModRosenbrockParams.index_pattern(d, n_neg, s_neg).s
    return make_mod_rosenbrock(d, s)


BENCHMARKS: dict = {
    "quadratic": lambda A: make_quadratic(A),
    "sum_of_sines": lambda d: make_sum_of_sines(d),
    "muller_brown": lambda **p: make_muller_brown(MullerBrownParams(**{k: tuple(v) for k, v in p.items()})),
    "mod_rosenbrock": _rosenbrock_from_params,
    "implicit_2d": lambda inner_tol=1e-12, warm_start=False: make_implicit_2d(inner_tol, warm_start),
    "linear_net": _linear_net_from_params,
}


def make_benchmark(name: str, params: Optional[dict] = None) -> Objective:
    """Build a fresh objective from its registry name and keyword parameters."""
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; known: {sorted(BENCHMARKS)}") from None
    return factory(**(params or {}))


def index_sets(r_max: int):
    """All subsets of 1..r_max, smallest first."""
    for size in range(r_max + 1):
        yield from itertools.combinations(range(1, r_max + 1), size)
