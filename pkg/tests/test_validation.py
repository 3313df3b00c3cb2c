import math

import numpy as np
import pytest

from ratecast.models import HyperParams
from ratecast.validation import (
    CvConfig,
    HyperParamSpace,
    chronological_split,
    holdout_eval,
    make_folds,
    nested_cv,
    rmse,
    sample_hyperparams,
)


# ------------------------------------------------------------------------ rmse


def test_rmse_identity_is_zero():
    assert rmse(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0])) == 0.0


def test_rmse_known_value():
    assert rmse(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(
        math.sqrt(12.5)
    )


def test_rmse_is_permutation_invariant():
    rng = np.random.default_rng(0)
    pred = rng.normal(size=50)
    actual = rng.normal(size=50)
    perm = rng.permutation(50)
    assert rmse(pred, actual) == pytest.approx(rmse(pred[perm], actual[perm]))


def test_rmse_rejects_bad_shapes():
    with pytest.raises(ValueError):
        rmse(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        rmse(np.zeros(0), np.zeros(0))


# --------------------------------------------------------------------- sampler


def test_degenerate_ranges_pin_every_knob():
    space = HyperParamSpace(
        learning_rate=(0.1, 0.1),
        n_estimators=(100, 100),
        max_depth=(7, 7),
        min_samples_split=(30, 30),
        min_samples_leaf=(10, 10),
        max_features=(4.12, 4.12),
        subsample=(1.0, 1.0),
    )
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = sample_hyperparams(space, rng)
        assert p.learning_rate == pytest.approx(0.1)
        assert (p.n_estimators, p.max_depth) == (100, 7)
        assert (p.min_samples_split, p.min_samples_leaf) == (30, 10)
        assert p.max_features == 4.12
        assert p.subsample == 1.0


def test_sampler_replays_under_same_seed():
    space = HyperParamSpace()
    draws_a = [sample_hyperparams(space, np.random.default_rng(9)) for _ in range(1)]
    rng1 = np.random.default_rng(9)
    rng2 = np.random.default_rng(9)
    seq1 = [sample_hyperparams(space, rng1) for _ in range(10)]
    seq2 = [sample_hyperparams(space, rng2) for _ in range(10)]
    assert seq1 == seq2
    assert seq1[0] == draws_a[0]


def test_sampler_stays_within_bounds_over_many_draws():
    space = HyperParamSpace(
        learning_rate=(0.01, 0.5),
        n_estimators=(10, 50),
        max_depth=(2, 9),
        min_samples_split=(5, 40),
        min_samples_leaf=(2, 30),
        max_features=(1.0, 6.0),
        subsample=(0.5, 1.0),
    )
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        p = sample_hyperparams(space, rng)
        assert 0.01 <= p.learning_rate <= 0.5
        assert 10 <= p.n_estimators <= 50
        assert 2 <= p.max_depth <= 9
        assert 5 <= p.min_samples_split <= 40
        assert 2 <= p.min_samples_leaf <= min(30, p.min_samples_split)
        assert 1.0 <= p.max_features <= 6.0
        assert 0.5 <= p.subsample <= 1.0


def test_space_rejects_empty_or_invalid_ranges():
    with pytest.raises(ValueError, match="empty range"):
        HyperParamSpace(max_depth=(8, 3))
    with pytest.raises(ValueError, match="min_samples_leaf"):
        HyperParamSpace(min_samples_leaf=(50, 60), min_samples_split=(10, 100))


# ----------------------------------------------------------------------- folds


def test_fold_placement_forced_when_widths_fill_rows():
    config = CvConfig(k=5, train_width=80, test_width=20, train_size=40, test_size=10)
    folds = make_folds(100, config, np.random.default_rng(0))
    for fold in folds:
        assert fold.train_region == (0, 80)
        assert fold.test_region == (80, 100)


def test_full_width_subset_is_whole_region():
    config = CvConfig(k=3, train_width=50, test_width=10, train_size=50, test_size=10)
    folds = make_folds(200, config, np.random.default_rng(1))
    for fold in folds:
        lo, hi = fold.train_region
        np.testing.assert_array_equal(fold.train_rows, np.arange(lo, hi))


def test_fold_widths_must_fit():
    config = CvConfig(k=1, train_width=90, test_width=20, train_size=10, test_size=5)
    with pytest.raises(ValueError, match="exceeds"):
        make_folds(100, config, np.random.default_rng(0))


def test_every_train_row_precedes_every_test_row_over_random_configs():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n_rows = int(rng.integers(30, 500))
        train_width = int(rng.integers(5, n_rows - 10))
        test_width = int(rng.integers(1, n_rows - train_width))
        config = CvConfig(
            k=int(rng.integers(1, 6)),
            train_width=train_width,
            test_width=test_width,
            train_size=int(rng.integers(1, train_width + 1)),
            test_size=int(rng.integers(1, test_width + 1)),
            seed=int(rng.integers(0, 1000)),
        )
        for fold in make_folds(n_rows, config, rng):
            assert fold.train_rows.max() < fold.test_rows.min()
            assert len(set(fold.train_rows.tolist())) == config.train_size
            assert len(set(fold.test_rows.tolist())) == config.test_size


def test_cv_config_validation():
    with pytest.raises(ValueError, match="train_size"):
        CvConfig(train_size=100, train_width=50)
    with pytest.raises(ValueError, match="positive"):
        CvConfig(k=0)


# ------------------------------------------------------------------- nested cv


_CV_DATA_CONFIG = CvConfig(
    num_params=1, k=3, train_width=150, test_width=50, train_size=120, test_size=40, seed=5
)


def _xor_data(n=400, seed=4):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 10, size=(n, 2))
    y = 10.0 * ((X[:, 0] > 5) ^ (X[:, 1] > 5))
    return X, y


def test_single_candidate_is_returned_regardless_of_score():
    X, y = _xor_data()
    space = HyperParamSpace(
        n_estimators=(5, 20), max_depth=(1, 4),
        min_samples_split=(2, 10), min_samples_leaf=(1, 5), max_features=(1.0, 2.0),
    )
    result = nested_cv(X, y, _CV_DATA_CONFIG, space, family="gbt")
    assert result.best_index == 0
    assert len(result.candidates) == 1
    assert result.best_params == result.candidates[0]


def test_nested_cv_recovers_planted_model():
    # the XOR-style target needs interaction depth; stumps cannot express it
    X, y = _xor_data()
    shallow = HyperParams(
        learning_rate=1.0, n_estimators=40, max_depth=1,
        min_samples_split=2, min_samples_leaf=1, max_features=2.0, seed=0,
    )
    deep = HyperParams(
        learning_rate=1.0, n_estimators=40, max_depth=3,
        min_samples_split=2, min_samples_leaf=1, max_features=2.0, seed=0,
    )
    config = CvConfig(
        num_params=2, k=3, train_width=150, test_width=50,
        train_size=120, test_size=40, seed=5,
    )
    result = nested_cv(X, y, config, candidates=[shallow, deep])
    assert result.best_params == deep
    assert result.mean_rmse[1] < result.mean_rmse[0]


def test_nested_cv_is_deterministic_and_order_independent():
    X, y = _xor_data(seed=6)
    config = CvConfig(
        num_params=3, k=2, train_width=100, test_width=30,
        train_size=60, test_size=20, seed=17,
    )
    space = HyperParamSpace(
        n_estimators=(5, 20), max_depth=(1, 4),
        min_samples_split=(2, 10), min_samples_leaf=(1, 5), max_features=(1.0, 2.0),
    )
    r1 = nested_cv(X, y, config, space)
    r2 = nested_cv(X, y, config, space)
    assert r1.candidates == r2.candidates
    assert r1.fold_rmse == r2.fold_rmse
    assert r1.best_index == r2.best_index


def test_cv_result_ties_keep_earliest_candidate():
    # constant target: every candidate scores exactly 0 in every fold
    rng = np.random.default_rng(7)
    X = rng.uniform(0, 10, size=(300, 2))
    y = np.full(300, 25.0)
    params = HyperParams(
        learning_rate=0.5, n_estimators=5, max_depth=2,
        min_samples_split=2, min_samples_leaf=1, max_features=2.0, seed=0,
    )
    config = CvConfig(
        num_params=2, k=2, train_width=100, test_width=30,
        train_size=80, test_size=25, seed=3,
    )
    result = nested_cv(X, y, config, candidates=[params, params])
    assert result.mean_rmse[0] == result.mean_rmse[1] == 0.0
    assert result.best_index == 0


# -------------------------------------------------------------------- holdout


def test_chronological_split_examples():
    assert chronological_split(10, 0.9) == 9
    assert chronological_split(30, 0.1) == 3
    assert chronological_split(2, 0.9) == 1


def test_holdout_split_rows():
    X = np.arange(10, dtype=float).reshape(-1, 1)
    y = np.full(10, 5.0)
    params = HyperParams(
        n_estimators=2, max_depth=2, min_samples_split=2, min_samples_leaf=1,
        max_features=1.0, seed=0,
    )
    result = holdout_eval(X, y, params)
    np.testing.assert_array_equal(result.train_rows, np.arange(9))
    np.testing.assert_array_equal(result.test_rows, np.array([9]))
    assert result.rmse_mbs == 0.0  # constant target is learned exactly


def test_holdout_subsets_replay_with_seed():
    rng = np.random.default_rng(8)
    X = rng.uniform(0, 10, size=(200, 3))
    y = X[:, 0] * 2 + rng.normal(0, 0.1, 200)
    params = HyperParams(
        n_estimators=10, max_depth=3, min_samples_split=2, min_samples_leaf=1,
        max_features=3.0, seed=1,
    )
    a = holdout_eval(X, y, params, train_subset=100, test_subset=10, seed=42)
    b = holdout_eval(X, y, params, train_subset=100, test_subset=10, seed=42)
    np.testing.assert_array_equal(a.train_rows, b.train_rows)
    np.testing.assert_array_equal(a.test_rows, b.test_rows)
    assert a.rmse_mbs == b.rmse_mbs
    c = holdout_eval(X, y, params, train_subset=100, test_subset=10, seed=43)
    assert not np.array_equal(a.train_rows, c.train_rows)


def test_holdout_rejects_oversized_subsets():
    X = np.arange(20, dtype=float).reshape(-1, 1)
    y = np.arange(20, dtype=float)
    params = HyperParams(
        n_estimators=2, max_depth=2, min_samples_split=2, min_samples_leaf=1,
        max_features=1.0, seed=0,
    )
    with pytest.raises(ValueError, match="train_subset"):
        holdout_eval(X, y, params, train_subset=19)
    with pytest.raises(ValueError, match="test_subset"):
        holdout_eval(X, y, params, test_subset=5)


def test_holdout_scoring_clamps_predictions():
    rng = np.random.default_rng(10)
    X = rng.uniform(0, 10, size=(100, 2))
    y = -(X[:, 0] * 5 + 10)  # negative targets force negative raw output
    params = HyperParams(
        n_estimators=20, max_depth=3, min_samples_split=2, min_samples_leaf=1,
        max_features=2.0, seed=0,
    )
    result = holdout_eval(X, y, params, split=0.8)
    assert result.predictions.min() >= 0.0
    # clamped-at-zero predictions of all-negative targets score like a zero forecast
    assert result.rmse_mbs == pytest.approx(
        float(np.sqrt(np.mean(result.actuals**2)))
    )
