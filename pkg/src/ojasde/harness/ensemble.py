"""Reproducible Monte Carlo ensembles.

Paths are grouped in fixed-size blocks. Block ``b`` of stream ``s`` draws from
a Philox generator keyed by the seed with counter words ``(s, b)``, so a block's
numbers depend only on ``(seed, s, b)`` and never on how blocks are spread
across workers. Block statistics are merged in block order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np


def make_stream(seed: int, *ids: int) -> np.random.Generator:
    """Counter-based generator for ``(seed, *ids)``; up to two ids."""
    if len(ids) > 2:
        raise ValueError("at most two stream ids")
    words = [0, 0] + [0] * (2 - len(ids)) + [int(i) for i in reversed(ids)]
    return np.random.Generator(np.random.Philox(key=int(seed), counter=words))


@dataclass(frozen=True)
class EnsembleResult:
    mean: float
    stderr: float
    n: int
    stderr_defined: bool = True


def _block_stats(values):
    v = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("non-finite path value")
    m = float(np.mean(v))
    return v.size, m, float(np.sum((v - m) ** 2))


def _merge(a, b):
    n_a, m_a, s_a = a
    n_b, m_b, s_b = b
    n = n_a + n_b
    d = m_b - m_a
    return n, m_a + d * n_b / n, s_a + s_b + d * d * n_a * n_b / n


def mc_ensemble(task: Callable, n_mc: int, seed: int, stream: int = 0,
                block_size: int = 65536, workers: int = 1) -> EnsembleResult:
    """Mean and standard error of ``n_mc`` i.i.d. path values.

    ``task(rng, size)`` returns ``size`` path values drawn with ``rng``.
    Errors raised inside a block are re-raised with ``path_range`` set to
    the block's ``(first, last + 1)`` path indices.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    starts = list(range(0, n_mc, block_size))

    def run(b):
        lo = starts[b]
        hi = min(lo + block_size, n_mc)
        try:
            return _block_stats(task(make_stream(seed, stream, b), hi - lo))
        except Exception as e:
            e.path_range = (lo, hi)
            raise

    if workers == 1:
        stats = [run(b) for b in range(len(starts))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(run, range(len(starts))))
    total = stats[0]
    for s in stats[1:]:
        total = _merge(total, s)
    n, mean, ss = total
    if n == 1:
        return EnsembleResult(mean, 0.0, 1, stderr_defined=False)
    return EnsembleResult(mean, float(np.sqrt(ss / (n - 1) / n)), n)
