"""Random-surfer session generator.

At page ``i`` a target is drawn from row ``i`` of ``W``. Drawing ``i``
itself ends the session there; any other target continues it. Sessions
that reach ``max_steps`` pages are cut off and counted.

Randomness is SplitMix64. Session ``s`` gets its own stream seeded by
``mix64(seed ^ mix64((s + 1) * 0x9E3779B97F4A7C15))``, so any partition of
the session range across workers yields the same log.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DomainError
from .graph import RowStochasticMatrix
from .ingest import VisitLog

RNG_ALGORITHM = "splitmix64-substream-v1"


@dataclass(frozen=True, eq=False)
class SimConfig:
    n_sessions: int
    seed: int = 0
    max_steps: int = 10_000
    start_distribution: np.ndarray | None = None

    def __post_init__(self):
        if self.n_sessions < 1:
            raise DomainError(f"n_sessions must be at least 1, got {self.n_sessions}")
        if self.max_steps < 1:
            raise DomainError(f"max_steps must be at least 1, got {self.max_steps}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.start_distribution is not None:
            p = np.asarray(self.start_distribution, dtype=np.float64)
            if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise DomainError("start distribution must be nonnegative and sum to 1")


def _normalized_cumsum(indptr: np.ndarray, data: np.ndarray) -> np.ndarray:
    cum = np.empty(len(data))
    for lo, hi in zip(indptr[:-1].tolist(), indptr[1:].tolist()):
        if hi > lo:
            seg = np.cumsum(data[lo:hi])
            cum[lo:hi] = seg / seg[-1]
            cum[hi - 1] = 1.0
    return cum


def simulate_sessions(W: RowStochasticMatrix, cfg: SimConfig, workers: int = 1,
                      backend=None) -> VisitLog:
    """Generate ``cfg.n_sessions`` sessions; output depends only on ``(W, cfg)``."""
    kern = backend or _backend.kernels
    cum = _normalized_cumsum(W.indptr, W.data)
    start = None
    if cfg.start_distribution is not None:
        p = np.asarray(cfg.start_distribution, dtype=np.float64)
        if len(p) != W.n:
            raise DomainError(f"start distribution has length {len(p)}, expected {W.n}")
        start = np.cumsum(p) / p.sum()
        start[-1] = 1.0

    def run(first, count):
        return kern.simulate_chunk(W.indptr, W.indices, cum, start, cfg.seed, first, count,
                                   cfg.max_steps)

    workers = max(1, min(int(workers), cfg.n_sessions))
    bounds = np.linspace(0, cfg.n_sessions, workers + 1).astype(np.int64).tolist()
    spans = [(lo, hi - lo) for lo, hi in zip(bounds[:-1], bounds[1:])]
    if workers == 1:
        chunks = [run(*spans[0])]
    else:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(lambda span: run(*span), spans))

    nodes = np.concatenate([c[0] for c in chunks])
    lengths = np.concatenate([c[1] for c in chunks])
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    return VisitLog(nodes, offsets, sum(c[2] for c in chunks))
