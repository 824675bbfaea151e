"""Replicated runs.

Replicas are advanced in lockstep within a process (one shared objective call
per step serves all of them).  With ``jobs > 1`` the seed list is split into
contiguous chunks, each run in its own worker with its own objective.
Every replica reads only its own generator, so results do not depend on the
chunking.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..oracle import make_benchmark
from ..saddlesearch import _search_replicas
from .config import ExperimentConfig


def _run_chunk(cfg: ExperimentConfig, seeds: list) -> list:
    obj = make_benchmark(cfg.benchmark, cfg.params)
    V0 = None if cfg.V0 is None else np.asarray(cfg.V0, dtype=float)
    return _search_replicas(obj, cfg.x0, V0, cfg.search, seeds)


def run_replicas(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """One RunRecord per replica, in seed order.  Failed replicas carry ``failure``."""
    seeds = cfg.seeds()
    jobs = max(1, min(jobs, len(seeds)))
    if jobs == 1:
        return _run_chunk(cfg, seeds)
    chunks = [list(c) for c in np.array_split(np.array(seeds), jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, [cfg] * jobs, [[int(s) for s in c] for c in chunks]))
    return [rec for part in parts for rec in part]
