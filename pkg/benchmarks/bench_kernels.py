"""Benchmark the jitted scoring kernels against the pure-numpy fallback.

Simulates a realistic re-rank workload: one question against a full
first-pass candidate set, scored with the flat best-match kernel and the
spanning kernel. Run:

    python benchmarks/bench_kernels.py
    EMBRANK_NO_NUMBA=1 python benchmarks/bench_kernels.py   # fallback only
"""

import time

import numpy as np

from embrank import _kernels

N_CANDIDATES = 400
ANSWER_TOKENS = 120
QUESTION_TOKENS = 8
DIM = 400
SPAN_LENGTH = 20
STRIDE = 2
REPEATS = 3


def build_workload(rng):
    """Precomputed similarity matrices and span bounds per candidate."""
    workload = []
    for _ in range(N_CANDIDATES):
        n_tokens = int(rng.integers(ANSWER_TOKENS // 2, ANSWER_TOKENS + 1))
        qmat = rng.standard_normal((QUESTION_TOKENS, DIM))
        qmat /= np.linalg.norm(qmat, axis=1, keepdims=True)
        amat = rng.standard_normal((n_tokens, DIM))
        amat /= np.linalg.norm(amat, axis=1, keepdims=True)
        sim = np.ascontiguousarray(qmat @ amat.T)
        starts = []
        s = 0
        while True:
            starts.append(s)
            if s + SPAN_LENGTH >= n_tokens:
                break
            s += STRIDE
        lo = np.asarray(starts, dtype=np.int64)
        hi = np.minimum(lo + SPAN_LENGTH, n_tokens).astype(np.int64)
        workload.append((sim, lo, hi))
    return workload


def time_path(workload, best_mean, span_best_mean):
    best = None
    checksum = 0.0
    for _ in range(REPEATS):
        start = time.perf_counter()
        total = 0.0
        for sim, lo, hi in workload:
            total += best_mean(sim)
            total += span_best_mean(sim, lo, hi)
        elapsed = time.perf_counter() - start
        best = elapsed if best is None else min(best, elapsed)
        checksum = total
    return best, checksum


def main():
    rng = np.random.default_rng(0)
    print(f"workload: {N_CANDIDATES} candidates x <= {ANSWER_TOKENS} tokens, "
          f"{QUESTION_TOKENS}-term question, dim {DIM}, "
          f"spans {SPAN_LENGTH}/{STRIDE}")
    workload = build_workload(rng)

    numpy_time, numpy_sum = time_path(
        workload, _kernels._best_mean_py, _kernels._span_best_mean_py)
    print(f"numpy fallback : {numpy_time * 1e3:9.2f} ms per query set")

    if _kernels.USING_NUMBA:
        _kernels.warmup()
        numba_time, numba_sum = time_path(
            workload, _kernels.best_mean, _kernels.span_best_mean)
        print(f"numba kernels  : {numba_time * 1e3:9.2f} ms per query set")
        print(f"speedup        : {numpy_time / numba_time:9.2f}x")
        agree = "yes" if numba_sum == numpy_sum else "NO"
        print(f"bit-identical  : {agree}")
    else:
        print("numba kernels  : unavailable (EMBRANK_NO_NUMBA set or numba missing)")


if __name__ == "__main__":
    main()
