"""Compiled vs numpy kernels on the word-tree workloads.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from mfz import _kernels_py as py
from mfz.matrices import build_matrices
from mfz.system import cantor_convolution

try:
    from mfz import _kernels as cy
except ImportError:
    cy = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    c3 = build_matrices(cantor_convolution(3)).mats
    c5 = build_matrices(cantor_convolution(5)).mats
    every3 = np.arange(4, dtype=np.int64)
    every5 = np.arange(6, dtype=np.int64)
    logp = np.log(np.asarray(cantor_convolution(3).p))
    rng = np.random.default_rng(0)
    words = rng.integers(0, 4, (100_000, 8)).astype(np.int64)
    batch = rng.random((200_000, 3, 3))
    return {
        "word_extremes c5 k=7": lambda k: k.word_extremes(c5, 7, every5),
        "word_min_rho c3 k=9": lambda k: k.word_min_rho(c3, 9, every3[1:3]),
        "lyapunov_exact c3 k=8": lambda k: k.lyapunov_exact(c3, logp, 8, every3),
        "neg_log_norms 1e5 x 8": lambda k: k.neg_log_norms(c3, words),
        "batch_log_spectral_radius 2e5": lambda k: k.batch_log_spectral_radius(batch),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':34s} {'numpy s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, fn in workloads().items():
        tp = best_of(lambda: fn(py), args.repeat)
        if cy is None:
            print(f"{name:34s} {tp:10.3f} {'n/a':>10s}")
            continue
        tc = best_of(lambda: fn(cy), args.repeat)
        print(f"{name:34s} {tp:10.3f} {tc:10.3f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
