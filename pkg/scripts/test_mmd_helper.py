"""
MMD 估计量测试：h核、配对设计、h矩阵、分数与协方差
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

# 添加项目根目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent))

from errors import DegenerateCovarianceError, InputError
from kernel_helper import median_heuristic_gamma
from mmd_helper import (compute_h_matrix, default_ell, estimate_scores, h_kernel, mmd_complete,
                        mmd_incomplete, mmd_linear, pair_capacity, sample_design, tree_sum)
from schemas import DesignMode, FeatureMatrix, HMatrix, KernelSpec, PairDesign

TWO_MINUS_TWO_OVER_E = 2.0 - 2.0 * math.exp(-1.0)


def _h(values: np.ndarray) -> HMatrix:
    """h-matrix with a placeholder design, for tests that only need the values."""
    values = np.asarray(values, dtype=np.float64)
    design = PairDesign(pairs=np.zeros((values.shape[0], 2), dtype=np.int64), n=2, mode=DesignMode.RANDOM)
    return HMatrix(values=values, design=design)


def test_h_kernel_hand_values():
    spec = KernelSpec(gamma=1.0)
    assert h_kernel(spec, [0.0], [0.0], [1.0], [1.0]) == 0.0
    assert h_kernel(spec, [0.0], [1.0], [0.0], [1.0]) == pytest.approx(TWO_MINUS_TWO_OVER_E, rel=1e-15)


def test_h_kernel_symmetric_bitwise():
    rng = np.random.default_rng(1)
    spec = KernelSpec(gamma=0.4)
    for _ in range(20):
        x, y, x2, y2 = rng.normal(size=(4, 6))
        assert h_kernel(spec, x, y, x2, y2) == h_kernel(spec, x2, y2, x, y)


def test_linear_design():
    design = sample_design(4, 0, DesignMode.LINEAR)
    assert design.pairs.tolist() == [[0, 1], [2, 3]]
    assert sample_design(5, 0, DesignMode.LINEAR).pairs.tolist() == [[0, 1], [2, 3]]


def test_full_design():
    pairs = sample_design(3, 0, DesignMode.FULL).pairs.tolist()
    assert sorted(map(tuple, pairs)) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]


def test_random_design_is_deterministic_and_distinct():
    first = sample_design(100, 500, DesignMode.RANDOM, seed=7)
    second = sample_design(100, 500, DesignMode.RANDOM, seed=7)
    assert np.array_equal(first.pairs, second.pairs)
    assert first.ell == 500
    assert np.all(first.pairs[:, 0] < first.pairs[:, 1])
    assert len({tuple(p) for p in first.pairs.tolist()}) == 500
    assert not np.array_equal(first.pairs, sample_design(100, 500, DesignMode.RANDOM, seed=8).pairs)


def test_random_design_large_n_uses_rejection_and_stays_distinct():
    n = 2000
    assert pair_capacity(n) > 1_000_000
    design = sample_design(n, 5 * n, DesignMode.RANDOM, seed=3)
    keys = design.pairs[:, 0] * n + design.pairs[:, 1]
    assert np.unique(keys).size == 5 * n
    assert np.all(design.pairs[:, 0] < design.pairs[:, 1])
    assert np.array_equal(design.pairs, sample_design(n, 5 * n, DesignMode.RANDOM, seed=3).pairs)


def test_random_design_can_exhaust_capacity():
    design = sample_design(5, 10, DesignMode.RANDOM, seed=0)
    assert sorted(map(tuple, design.pairs.tolist())) == [(i, j) for i in range(5) for j in range(i + 1, 5)]


@pytest.mark.parametrize("n,ell", [(5, 11), (5, 0), (1, 1)])
def test_random_design_rejects_bad_sizes(n, ell):
    with pytest.raises(InputError):
        sample_design(n, ell, DesignMode.RANDOM)


def test_default_ell_caps_at_capacity():
    assert default_ell(500) == 2500
    assert default_ell(4, r=5) == 6


def test_tree_sum_is_independent_of_how_rows_were_produced():
    rng = np.random.default_rng(2)
    values = rng.normal(size=(1001, 3)) * 1e6
    assert np.allclose(tree_sum(values), values.sum(axis=0), rtol=1e-12)
    assert np.array_equal(tree_sum(values), tree_sum(np.concatenate([values[:400], values[400:]])))
    assert np.array_equal(tree_sum(np.zeros((0, 3))), np.zeros(3))


def test_h_matrix_identical_samples_are_zero():
    x = FeatureMatrix(data=np.random.default_rng(0).normal(size=(30, 2)))
    design = sample_design(30, 100, DesignMode.RANDOM)
    h = compute_h_matrix(KernelSpec(gamma=0.5), [x], x, design)
    assert h.values.shape == (100, 1)
    assert np.all(h.values == 0.0)


def test_h_matrix_duplicate_models_give_identical_columns():
    rng = np.random.default_rng(4)
    x, y = FeatureMatrix(data=rng.normal(size=(40, 3))), FeatureMatrix(data=rng.normal(size=(40, 3)))
    h = compute_h_matrix(KernelSpec(gamma=0.5), [x, x], y, sample_design(40, 200, DesignMode.RANDOM))
    assert np.array_equal(h.values[:, 0], h.values[:, 1])


def test_h_matrix_hand_value_on_full_design():
    x = FeatureMatrix.from_array([[0.0], [0.0]])
    y = FeatureMatrix.from_array([[1.0], [1.0]])
    h = compute_h_matrix(KernelSpec(gamma=1.0), [x], y, sample_design(2, 0, DesignMode.FULL))
    assert h.values[:, 0] == pytest.approx([TWO_MINUS_TWO_OVER_E] * 2, rel=1e-15)
    assert mmd_incomplete(h)[0] == pytest.approx(TWO_MINUS_TWO_OVER_E, rel=1e-15)


def test_h_matrix_same_bits_for_any_chunking_and_threads():
    rng = np.random.default_rng(6)
    models = [FeatureMatrix(data=rng.normal(size=(300, 4)) + s) for s in range(3)]
    real = FeatureMatrix(data=rng.normal(size=(300, 4)))
    design = sample_design(300, 1500, DesignMode.RANDOM, seed=1)
    spec = KernelSpec(gamma=0.2)
    serial = compute_h_matrix(spec, models, real, design, workers=1, chunk_pairs=1500)
    threaded = compute_h_matrix(spec, models, real, design, workers=4, chunk_pairs=97)
    assert np.array_equal(serial.values, threaded.values)
    assert np.array_equal(mmd_incomplete(serial), mmd_incomplete(threaded))


def test_h_matrix_shape_checks():
    rng = np.random.default_rng(0)
    real = FeatureMatrix(data=rng.normal(size=(10, 2)))
    design = sample_design(10, 20, DesignMode.RANDOM)
    with pytest.raises(InputError):
        compute_h_matrix(KernelSpec(gamma=1.0), [FeatureMatrix(data=rng.normal(size=(10, 3)))], real, design)
    with pytest.raises(InputError):
        compute_h_matrix(KernelSpec(gamma=1.0), [FeatureMatrix(data=rng.normal(size=(12, 2)))], real, design)
    with pytest.raises(InputError):
        compute_h_matrix(KernelSpec(gamma=1.0), [], real, design)


def test_full_design_equals_complete_u_statistic():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n, d = int(rng.integers(2, 51)), int(rng.integers(1, 9))
        x = FeatureMatrix(data=rng.normal(size=(n, d)))
        y = FeatureMatrix(data=rng.normal(size=(n, d)) + rng.uniform(0, 1))
        spec = KernelSpec(gamma=float(rng.uniform(0.05, 2.0)))
        incomplete = mmd_incomplete(compute_h_matrix(spec, [x], y, sample_design(n, 0, DesignMode.FULL)))[0]
        complete = mmd_complete(spec, x, y)
        assert incomplete == pytest.approx(complete, rel=1e-12, abs=1e-14)


def test_mmd_complete_hand_values():
    x = FeatureMatrix(data=np.random.default_rng(0).normal(size=(25, 3)))
    assert mmd_complete(KernelSpec(gamma=1.0), x, x) == 0.0
    zeros, ones = FeatureMatrix.from_array([[0.0], [0.0]]), FeatureMatrix.from_array([[1.0], [1.0]])
    assert mmd_complete(KernelSpec(gamma=1.0), zeros, ones) == pytest.approx(TWO_MINUS_TWO_OVER_E, rel=1e-15)


def test_mmd_complete_ignores_row_order():
    rng = np.random.default_rng(12)
    x, y = rng.normal(size=(60, 3)), rng.normal(0.3, 1.0, size=(60, 3))
    spec = KernelSpec(gamma=0.4)
    base = mmd_complete(spec, FeatureMatrix(data=x), FeatureMatrix(data=y))
    # rows stay paired: the i != j cross term excludes k(x_i, y_i)
    order = rng.permutation(60)
    permuted = mmd_complete(spec, FeatureMatrix(data=x[order]), FeatureMatrix(data=y[order]))
    assert permuted == pytest.approx(base, rel=1e-12)


def test_mmd_complete_near_zero_for_equal_distributions():
    rng = np.random.default_rng(8)
    x = FeatureMatrix(data=rng.normal(size=(2000, 1)))
    y = FeatureMatrix(data=rng.normal(size=(2000, 1)))
    gamma = median_heuristic_gamma(FeatureMatrix(data=np.vstack([x.data, y.data])))
    assert abs(mmd_complete(KernelSpec(gamma=gamma), x, y)) < 0.01


def test_mmd_linear_uses_consecutive_pairs():
    rng = np.random.default_rng(9)
    x, y = FeatureMatrix(data=rng.normal(size=(11, 2))), FeatureMatrix(data=rng.normal(size=(11, 2)))
    spec = KernelSpec(gamma=0.5)
    expected = np.mean([h_kernel(spec, x.data[i], y.data[i], x.data[i + 1], y.data[i + 1])
                        for i in range(0, 10, 2)])
    assert mmd_linear(spec, x, y) == pytest.approx(expected, rel=1e-12)


def test_estimate_scores_recovers_row_covariance():
    rng = np.random.default_rng(12)
    c = np.array([[1.0, 0.5], [0.5, 2.0]])
    ell = 40000
    rows = rng.multivariate_normal([0.3, 0.1], c, size=ell)
    scores = estimate_scores(_h(rows))
    assert scores.z == pytest.approx(rows.mean(axis=0), rel=1e-12)
    assert np.allclose(scores.sigma * ell, c, atol=0.06)


def test_estimate_scores_sigma_symmetric_positive_definite():
    rng = np.random.default_rng(13)
    for s in (2, 3, 7):
        scores = estimate_scores(_h(rng.normal(size=(50, s))), model_ids=[f"m{k}" for k in range(s)])
        assert np.array_equal(scores.sigma, scores.sigma.T)
        assert np.all(np.linalg.eigvalsh(scores.sigma) > 0)
        assert scores.ridge > 0


def test_estimate_scores_rejects_constant_column():
    values = np.random.default_rng(0).normal(size=(20, 3))
    values[:, 1] = 0.25
    with pytest.raises(DegenerateCovarianceError) as info:
        estimate_scores(_h(values))
    assert info.value.columns == (1,)


def test_estimate_scores_rejects_duplicate_columns():
    column = np.random.default_rng(0).normal(size=20)
    with pytest.raises(DegenerateCovarianceError) as info:
        estimate_scores(_h(np.stack([column, column, -2 * column + 1], axis=1)))
    assert info.value.columns == (0, 1)


def test_estimate_scores_needs_two_models_and_two_rows():
    with pytest.raises(InputError):
        estimate_scores(_h(np.ones((10, 1))))
    with pytest.raises(InputError):
        estimate_scores(_h(np.ones((1, 3))))


@pytest.mark.slow
def test_incomplete_estimate_scales_linearly_in_n():
    spec = KernelSpec(gamma=0.1)

    def best_time(n: int) -> float:
        rng = np.random.default_rng(n)
        x, y = FeatureMatrix(data=rng.normal(size=(n, 8))), FeatureMatrix(data=rng.normal(size=(n, 8)))
        design = sample_design(n, default_ell(n), DesignMode.RANDOM, seed=0)
        timings = []
        for _ in range(5):
            started = time.perf_counter()
            mmd_incomplete(compute_h_matrix(spec, [x], y, design, workers=1))
            timings.append(time.perf_counter() - started)
        return min(timings)

    ratio = best_time(20000) / best_time(10000)
    assert 1.6 <= ratio <= 2.6, f"time ratio {ratio:.2f} for doubling n"


@pytest.mark.slow
def test_null_incomplete_statistic_is_asymptotically_normal():
    n, trials = 500, 2000
    spec = KernelSpec(gamma=1.0 / 16.0)
    values = []
    for trial in range(trials):
        rng = np.random.default_rng([trial, 99])
        x, y = FeatureMatrix(data=rng.normal(size=(n, 8))), FeatureMatrix(data=rng.normal(size=(n, 8)))
        design = sample_design(n, default_ell(n), DesignMode.RANDOM, seed=trial)
        values.append(mmd_incomplete(compute_h_matrix(spec, [x], y, design))[0])
    values = np.asarray(values)
    standardized = (values - values.mean()) / values.std(ddof=1)
    assert stats.kstest(standardized, "norm").pvalue > 0.01
