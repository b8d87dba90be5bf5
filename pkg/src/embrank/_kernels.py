"""Hot scoring kernels: numba-jitted loops with a pure-numpy fallback.

Set EMBRANK_NO_NUMBA=1 to force the numpy path (or when numba is not
installed). Both paths accumulate in identical order over identical
similarity matrices, so they produce bit-identical scores; see
benchmarks/bench_kernels.py for the speed comparison.
"""

from __future__ import annotations

import os

import numpy as np


def _flag_disabled() -> bool:
    return os.environ.get("EMBRANK_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


def _best_mean_py(sim: np.ndarray) -> float:
    """Mean over rows of the row-wise max of sim (Q x M)."""
    q, m = sim.shape
    if q == 0 or m == 0:
        return 0.0
    total = 0.0
    for row in range(q):
        total += float(np.max(sim[row]))
    return total / q


def _span_best_mean_py(sim: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Max over spans of the mean row-wise max within columns [lo, hi)."""
    q = sim.shape[0]
    n_spans = lo.shape[0]
    if n_spans == 0:
        return 0.0
    best = -np.inf
    for s in range(n_spans):
        a, b = int(lo[s]), int(hi[s])
        if b <= a or q == 0:
            score = 0.0
        else:
            total = 0.0
            for row in range(q):
                total += float(np.max(sim[row, a:b]))
            score = total / q
        if score > best:
            best = score
    return float(best)


USING_NUMBA = False

if not _flag_disabled():
    try:
        from numba import njit

        @njit(cache=True, nogil=True)
        def _best_mean_nb(sim):  # pragma: no cover - exercised via dispatcher
            q, m = sim.shape
            if q == 0 or m == 0:
                return 0.0
            total = 0.0
            for row in range(q):
                rowmax = sim[row, 0]
                for col in range(1, m):
                    v = sim[row, col]
                    if v > rowmax:
                        rowmax = v
                total += rowmax
            return total / q

        @njit(cache=True, nogil=True)
        def _span_best_mean_nb(sim, lo, hi):  # pragma: no cover
            q = sim.shape[0]
            n_spans = lo.shape[0]
            if n_spans == 0:
                return 0.0
            best = -np.inf
            for s in range(n_spans):
                a = lo[s]
                b = hi[s]
                if b <= a or q == 0:
                    score = 0.0
                else:
                    total = 0.0
                    for row in range(q):
                        rowmax = sim[row, a]
                        for col in range(a + 1, b):
                            v = sim[row, col]
                            if v > rowmax:
                                rowmax = v
                        total += rowmax
                    score = total / q
                if score > best:
                    best = score
            return best

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False

if USING_NUMBA:
    best_mean = _best_mean_nb
    span_best_mean = _span_best_mean_nb
else:
    best_mean = _best_mean_py
    span_best_mean = _span_best_mean_py


def warmup() -> None:
    """Trigger jit compilation so timed paths measure steady state."""
    sim = np.ones((1, 1), dtype=np.float64)
    bounds = np.zeros(1, dtype=np.int64)
    best_mean(sim)
    span_best_mean(sim, bounds, bounds + 1)
