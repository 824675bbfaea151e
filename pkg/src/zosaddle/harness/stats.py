"""Summary statistics over saddle-search traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from ..estimators import hess_vec_estimate
from ..oracle import Objective

PLATEAU_FACTOR = 3.0
MIN_WINDOW = 20


def plateau_stat(records) -> float:
    """Mean over replicas of the per-replica minimum squared distance to the saddle."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    mins = []
    for rec in records:
        if rec.dist_sq is None:
            raise ValueError("record has no reference saddle (dist_sq missing)")
        mins.append(np.nanmin(rec.dist_sq))
    return float(np.mean(mins))


def _check_ladder(ladder):
    pts = sorted(((float(l), float(p)) for l, p in ladder), reverse=True)
    if len(pts) < 3:
        raise ValueError("need at least 3 ladder points")
    if any(p <= 0 for _, p in pts):
        raise ValueError("plateau values must be positive")
    ratios = [a[0] / b[0] for a, b in zip(pts, pts[1:])]
    if not np.allclose(ratios, 2.0, rtol=1e-6):
        raise ValueError("ladder lengths must halve from rung to rung")
    return pts


def fit_decay_order(ladder) -> float:
    """Least-squares slope of log(plateau) against log(l)."""
    pts = _check_ladder(ladder)
    ll = np.log([l for l, _ in pts])
    lp = np.log([p for _, p in pts])
    return float(np.polyfit(ll, lp, 1)[0])


def step_orders(ladder) -> list:
    """log2(plateau(l_{r-1}) / plateau(l_r)) for consecutive halvings."""
    pts = _check_ladder(ladder)
    return [math.log2(a[1] / b[1]) for a, b in zip(pts, pts[1:])]


@dataclass
class SummaryTable:
    """Plateau values keyed by (l, alpha), with per-step decay orders."""

    rows: dict = field(default_factory=dict)

    @classmethod
    def from_plateaus(cls, plateaus: dict) -> "SummaryTable":
        table = cls()
        for alpha in sorted({a for _, a in plateaus}):
            ladder = sorted(((l, p) for (l, a), p in plateaus.items() if a == alpha), reverse=True)
            orders = [None] + (step_orders(ladder) if len(ladder) >= 3 else [None] * (len(ladder) - 1))
            for (l, p), o in zip(ladder, orders):
                table.rows[(l, alpha)] = {"plateau": p, "order": o}
        return table

    def alphas(self) -> list:
        return sorted({a for _, a in self.rows})

    def ladder(self, alpha: float) -> list:
        return sorted(((l, r["plateau"]) for (l, a), r in self.rows.items() if a == alpha), reverse=True)

    def fitted_order(self, alpha: float) -> float:
        return fit_decay_order(self.ladder(alpha))

    def to_list(self) -> list:
        return [
            {"l": l, "alpha": a, "plateau": r["plateau"], "order": r["order"]}
            for (l, a), r in sorted(self.rows.items(), key=lambda kv: (kv[0][1], -kv[0][0]))
        ]

    def format(self) -> str:
        lines = [f"{'l':>12} {'alpha':>10} {'plateau':>12} {'order':>7}"]
        for row in self.to_list():
            order = "" if row["order"] is None else f"{row['order']:.2f}"
            lines.append(f"{row['l']:>12.6g} {row['alpha']:>10.3g} {row['plateau']:>12.3e} {order:>7}")
        return "\n".join(lines)


def fit_linear_rate(record, window: Optional[tuple] = None) -> dict:
    """Log-linear fit of the pre-plateau decay of dist_sq.

    The plateau starts at the first entry within 3x of the trace minimum; its
    level is the median of the trace from there on.  The fit uses
    ``window=(start, stop)`` if given, otherwise every row before the plateau
    onset.
    """
    dist = record if isinstance(record, np.ndarray) else getattr(record, "dist_sq", None)
    if dist is None:
        raise ValueError("trace has no dist_sq")
    dist = np.asarray(dist, dtype=float)
    floor = np.nanmin(dist)
    onset = int(np.argmax(dist <= PLATEAU_FACTOR * floor))
    plateau = float(np.median(dist[onset:]))
    start, stop = (0, onset) if window is None else window
    seg = dist[start:stop]
    n = np.arange(start, start + len(seg))
    keep = np.isfinite(seg) & (seg > 0)
    if keep.sum() < MIN_WINDOW:
        raise ValueError(f"fit window has {int(keep.sum())} points, need {MIN_WINDOW}")
    slope, intercept = np.polyfit(n[keep], np.log(seg[keep]), 1)
    resid = np.log(seg[keep]) - (slope * n[keep] + intercept)
    return {"slope": float(slope), "plateau": plateau, "onset": onset, "rms_residual": float(np.sqrt(np.mean(resid**2)))}


# ---------------------------------------------------------------------------
# estimator variance


def hessian_apply_estimate(obj: Objective, x, r, l: float, v) -> np.ndarray:
    """Dense Hessian estimate applied to v, coef * (r (r.v) - v), without forming the matrix."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    vals = obj.eval(np.stack(np.broadcast_arrays(x + l * r, x - l * r, x + 0 * r)))
    coef = (vals[0] + vals[1] - 2 * vals[2]) / (2 * l * l)
    return coef[..., None] * (r * np.sum(r * v, axis=-1, keepdims=True) - v)


def hessian_sq_spectral(obj: Objective, x, r, l: float) -> np.ndarray:
    """||H(x, r, l)||_2^2 using the eigenstructure of r r^T - I (eigenvalues |r|^2 - 1 and -1)."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    vals = obj.eval(np.stack(np.broadcast_arrays(x + l * r, x - l * r, x + 0 * r)))
    coef = (vals[0] + vals[1] - 2 * vals[2]) / (2 * l * l)
    rr = np.sum(r * r, axis=-1)
    return coef**2 * np.maximum(np.abs(rr - 1.0), 1.0) ** 2


def _pooled_std(samples) -> float:
    """Root-mean over components of the per-component sample variance."""
    return float(np.sqrt(np.mean(np.var(samples, axis=0, ddof=1))))


def variance_study(
    make_objective: Callable[[int], Objective],
    point: Callable[[int, np.random.Generator], np.ndarray],
    dims: Iterable[int],
    samples: int,
    l: float,
    rng: np.random.Generator,
    chunk: int = 2000,
) -> list:
    """Spread of the dense-Hessian product H v against the Hessian-vector estimate H_v.

    For each d a unit vector v is drawn once; both estimators are sampled
    ``samples`` times at ``point(d, rng)``.  Reports the pooled component
    standard deviation and mean squared norm of each, plus E||H||_2^2.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    rows = []
    for d in dims:
        obj = make_objective(d)
        x = np.asarray(point(d, rng), dtype=float)
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        hv, hvec, hsq = [], [], []
        done = 0
        while done < samples:
            m = min(chunk, samples - done)
            r = rng.standard_normal((m, d))
            hv.append(hessian_apply_estimate(obj, x, r, l, v))
            hsq.append(hessian_sq_spectral(obj, x, r, l))
            hvec.append(hess_vec_estimate(obj, x, v, r, l))
            done += m
        hv, hvec, hsq = np.concatenate(hv), np.concatenate(hvec), np.concatenate(hsq)
        rows.append(
            {
                "d": int(d),
                "hessian_std": _pooled_std(hv),
                "hessvec_std": _pooled_std(hvec),
                "hessian_apply_sq": float(np.mean(np.sum(hv * hv, axis=-1))),
                "hessvec_sq": float(np.mean(np.sum(hvec * hvec, axis=-1))),
                "hessian_sq": float(np.mean(hsq)),
            }
        )
    return rows


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
