import os
import subprocess
import sys

import numpy as np
import pytest

from mmfuse import _kernels


def _random_case(seed, n_words=40, dim=7, n_pairs=200):
    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(n_words, dim))
    idx1 = rng.integers(0, n_words, n_pairs)
    idx2 = rng.integers(0, n_words, n_pairs)
    return matrix, idx1.astype(np.int64), idx2.astype(np.int64)


def test_pair_cosines_match_plain_formula():
    matrix, idx1, idx2 = _random_case(0)
    scores, degenerate = _kernels.pair_cosine_scores(matrix, idx1, idx2)
    assert degenerate == 0
    for p in range(len(idx1)):
        u, v = matrix[idx1[p]], matrix[idx2[p]]
        expected = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
        assert scores[p] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_numpy_and_numba_paths_agree(seed):
    matrix, idx1, idx2 = _random_case(seed)
    matrix[3] = 0.0  # force a degenerate row into the mix
    s_np, d_np = _kernels.pair_cosine_scores_numpy(matrix, idx1, idx2)
    if _kernels.pair_cosine_scores_numba is None:
        pytest.skip("numba unavailable")
    s_nb, d_nb = _kernels.pair_cosine_scores_numba(matrix, idx1, idx2)
    np.testing.assert_allclose(s_np, s_nb, atol=1e-12)
    assert d_np == d_nb

    values = np.round(np.random.default_rng(seed).normal(size=101), 1)
    r_np = _kernels.average_ranks_numpy(values)
    r_nb = _kernels.average_ranks_numba(values)
    np.testing.assert_array_equal(r_np, r_nb)


def test_degenerate_pairs_score_zero():
    matrix = np.array([[0.0, 0.0], [1.0, 0.0], [1e-13, 0.0]])
    scores, degenerate = _kernels.pair_cosine_scores(
        matrix, np.array([0, 1, 2]), np.array([1, 1, 1])
    )
    assert scores[0] == 0.0
    assert scores[1] == 1.0
    assert scores[2] == 0.0
    assert degenerate == 2


def test_empty_pair_list():
    matrix = np.eye(3)
    empty = np.array([], dtype=np.int64)
    scores, degenerate = _kernels.pair_cosine_scores(matrix, empty, empty)
    assert scores.shape == (0,)
    assert degenerate == 0


def test_average_ranks_against_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(20):
        values = np.round(rng.normal(size=30), 1)  # coarse grid forces ties
        ranks = _kernels.average_ranks(values)
        for i, v in enumerate(values):
            less = int(np.sum(values < v))
            equal = int(np.sum(values == v))
            expected = sum(range(less + 1, less + equal + 1)) / equal
            assert ranks[i] == expected


def test_average_ranks_all_tied():
    ranks = _kernels.average_ranks(np.full(5, 3.25))
    np.testing.assert_array_equal(ranks, np.full(5, 3.0))


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, MMFUSE_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from mmfuse import _kernels; print(_kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "numpy"
