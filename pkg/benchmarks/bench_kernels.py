"""Time the numba kernels against the pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [n_words] [dim] [n_pairs]
"""

import sys
import time

import numpy as np

from mmfuse import _kernels


def timeit(fn, *args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main(argv):
    n_words = int(argv[1]) if len(argv) > 1 else 5000
    dim = int(argv[2]) if len(argv) > 2 else 300
    n_pairs = int(argv[3]) if len(argv) > 3 else 200_000

    rng = np.random.default_rng(0)
    matrix = rng.normal(size=(n_words, dim))
    idx1 = rng.integers(0, n_words, n_pairs).astype(np.int64)
    idx2 = rng.integers(0, n_words, n_pairs).astype(np.int64)
    values = rng.normal(size=n_pairs)

    rows = []
    np_cos = timeit(_kernels.pair_cosine_scores_numpy, matrix, idx1, idx2)
    np_rank = timeit(_kernels.average_ranks_numpy, values)
    rows.append(("pair_cosine_scores", "numpy", np_cos, 1.0))
    if _kernels.pair_cosine_scores_numba is not None:
        _kernels.pair_cosine_scores_numba(matrix, idx1[:2], idx2[:2])  # compile
        nb_cos = timeit(_kernels.pair_cosine_scores_numba, matrix, idx1, idx2)
        rows.append(("pair_cosine_scores", "numba", nb_cos, np_cos / nb_cos))
        s_np, d_np = _kernels.pair_cosine_scores_numpy(matrix, idx1, idx2)
        s_nb, d_nb = _kernels.pair_cosine_scores_numba(matrix, idx1, idx2)
        assert d_np == d_nb and np.abs(s_np - s_nb).max() < 1e-12
    rows.append(("average_ranks", "numpy", np_rank, 1.0))
    if _kernels.average_ranks_numba is not None:
        _kernels.average_ranks_numba(values[:2])  # compile
        nb_rank = timeit(_kernels.average_ranks_numba, values)
        rows.append(("average_ranks", "numba", nb_rank, np_rank / nb_rank))
        assert np.array_equal(
            _kernels.average_ranks_numpy(values),
            _kernels.average_ranks_numba(values),
        )

    print(f"matrix {n_words}x{dim}, {n_pairs} pairs "
          f"(active backend: {_kernels.BACKEND})")
    print(f"{'kernel':<22} {'path':<6} {'best time':>12} {'speedup':>8}")
    for kernel, path, seconds, speedup in rows:
        print(f"{kernel:<22} {path:<6} {seconds * 1e3:>10.2f}ms {speedup:>7.2f}x")


if __name__ == "__main__":
    main(sys.argv)
